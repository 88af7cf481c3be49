//! Constraint relaxation strategies: ℓ1 relaxation with penalty steering and
//! feasibility restoration with phase switching.

use crate::linalg::{norm_1, Matrix};
use crate::subproblem::Direction;

/// `ρ∇f - ∇c y - z_L + z_U`.
pub fn lagrangian_gradient(grad_f: &[f64], jac: &Matrix, rho: f64, y: &[f64], z_lower: &[f64], z_upper: &[f64]) -> Vec<f64> {
    let jty = jac.tr_mul_vec(y);
    (0..grad_f.len())
        .map(|i| rho * grad_f[i] - jty[i] - z_lower[i] + z_upper[i])
        .collect()
}

/// Dual residual of the ℓ1-relaxed problem:
/// `‖∇L‖₁ + Σ_S |y c| + Σ_{c>0} |(y + 1) c| + Σ_{c<0} |(y - 1) c|`.
pub fn error_measure(lagrangian_gradient: &[f64], y: &[f64], c: &[f64]) -> f64 {
    let mut e = norm_1(lagrangian_gradient);
    for (yj, cj) in y.iter().zip(c) {
        e += if *cj > 0.0 {
            ((yj + 1.0) * cj).abs()
        } else if *cj < 0.0 {
            ((yj - 1.0) * cj).abs()
        } else {
            (yj * cj).abs()
        };
    }
    e
}

/// The complementarity part of [`error_measure`] (the sign conditions of the
/// ℓ1 norm on violated constraints).
pub fn l1_sign_residual(y: &[f64], c: &[f64]) -> f64 {
    error_measure(&[], y, c)
}

/// `‖c + ∇cᵀd‖₁`.
pub fn linearized_infeasibility(c: &[f64], jac: &Matrix, dx: &[f64]) -> f64 {
    let jd = jac.mul_vec(dx);
    c.iter().zip(&jd).map(|(c, jd)| (c + jd).abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteeringState {
    pub rho: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub rho_decrease_factor: f64,
    pub rho_min: f64,
}

impl Default for SteeringState {
    fn default() -> Self {
        Self {
            rho: 1.0,
            epsilon1: 0.1,
            epsilon2: 0.1,
            rho_decrease_factor: 0.1,
            rho_min: 1e-14,
        }
    }
}

/// Post-hoc verification of the steering rules at the returned direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SteeringCheck {
    pub linearized_feasibility: bool,
    pub model_decrease: bool,
    pub penalty_cap: bool,
}

impl SteeringCheck {
    pub fn holds(&self) -> bool {
        self.linearized_feasibility && self.model_decrease && self.penalty_cap
    }
}

/// Quantities reported for one subproblem solve at a given `ρ`.
#[derive(Clone, Debug)]
pub struct PenaltySolve {
    pub direction: Direction,
    /// `Δm_ρ(d)`, the predicted merit reduction.
    pub predicted_reduction: f64,
}

#[derive(Clone, Debug)]
pub struct SteeringOutcome {
    pub solve: PenaltySolve,
    pub rho: f64,
    /// Number of subproblem solves.
    pub solves: usize,
    /// `None` when the linearization was consistent and no steering was needed.
    pub check: Option<SteeringCheck>,
}

/// Inputs of the steering rules at the current iterate.
pub struct SteeringContext<'a> {
    pub c: &'a [f64],
    pub jac: &'a Matrix,
    /// Constraint and bound multipliers of the current iterate.
    pub y: &'a [f64],
    pub z_lower: &'a [f64],
    pub z_upper: &'a [f64],
}

/// Tolerance below which a linearized infeasibility counts as zero.
pub fn linearized_zero_tolerance(c: &[f64]) -> f64 {
    1e-9 * norm_1(c).max(1.0)
}

/// Solves the ℓ1 subproblem and decreases `ρ` until the linearized
/// infeasibility and merit-model conditions hold, then caps `ρ` by the
/// squared feasibility error measure.
///
/// `solve(ρ)` returns the subproblem direction and predicted merit reduction.
pub fn l1_compute_direction<E>(
    state: &mut SteeringState,
    ctx: &SteeringContext,
    mut solve: impl FnMut(f64) -> Result<PenaltySolve, E>,
) -> Result<SteeringOutcome, E> {
    let tol = linearized_zero_tolerance(ctx.c);
    let l0 = norm_1(ctx.c);
    let lin = |d: &Direction| linearized_infeasibility(ctx.c, ctx.jac, &d.dx);
    let mut solves = 1;
    let mut current = solve(state.rho)?;
    if lin(&current.direction) <= tol {
        return Ok(SteeringOutcome {
            solve: current,
            rho: state.rho,
            solves,
            check: None,
        });
    }

    let feasibility = solve(0.0)?;
    solves += 1;
    let l_bar = lin(&feasibility.direction);
    let m_bar = feasibility.predicted_reduction;
    let (eps1, eps2) = (state.epsilon1, state.epsilon2);
    let linear_ok = |d: &Direction| {
        let l = lin(d);
        if l_bar <= tol {
            l <= tol
        } else {
            l0 - l >= eps1 * (l0 - l_bar)
        }
    };
    let model_ok = |s: &PenaltySolve| s.predicted_reduction >= eps2 * m_bar;

    let y_bar: Vec<f64> = ctx.y.iter().zip(&feasibility.direction.dy).map(|(y, d)| y + d).collect();
    let zl_bar: Vec<f64> = ctx
        .z_lower
        .iter()
        .zip(&feasibility.direction.dz_lower)
        .map(|(z, d)| z + d)
        .collect();
    let zu_bar: Vec<f64> = ctx
        .z_upper
        .iter()
        .zip(&feasibility.direction.dz_upper)
        .map(|(z, d)| z + d)
        .collect();
    let zero = vec![0.0; ctx.jac.cols()];
    let grad0 = lagrangian_gradient(&zero, ctx.jac, 0.0, &y_bar, &zl_bar, &zu_bar);
    let e0 = error_measure(&grad0, &y_bar, ctx.c);
    // The cap drives ρ to zero near infeasible stationary points. With a
    // consistent linearization it would do the same at every feasible point.
    let inconsistent = l_bar > tol;
    let cap = if inconsistent {
        (e0 / l0.max(1.0)).powi(2).max(state.rho_min)
    } else {
        f64::INFINITY
    };

    let mut capped = false;
    loop {
        while !(linear_ok(&current.direction) && model_ok(&current)) && state.rho > state.rho_min {
            state.rho = (state.rho * state.rho_decrease_factor).max(state.rho_min);
            current = solve(state.rho)?;
            solves += 1;
        }
        if capped || state.rho <= cap {
            break;
        }
        state.rho = cap;
        current = solve(state.rho)?;
        solves += 1;
        capped = true;
    }
    let check = SteeringCheck {
        linearized_feasibility: linear_ok(&current.direction),
        model_decrease: model_ok(&current),
        penalty_cap: state.rho <= cap,
    };
    Ok(SteeringOutcome {
        solve: current,
        rho: state.rho,
        solves,
        check: Some(check),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Optimality,
    Restoration,
}

/// Phase of the feasibility restoration strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseState {
    pub phase: Phase,
    /// Infeasibility when restoration was last entered.
    pub entry_eta: f64,
    pub switches: usize,
}

impl Default for PhaseState {
    fn default() -> Self {
        Self {
            phase: Phase::Optimality,
            entry_eta: f64::INFINITY,
            switches: 0,
        }
    }
}

impl PhaseState {
    pub fn enter_restoration(&mut self, eta: f64) {
        self.phase = Phase::Restoration;
        self.entry_eta = eta;
        self.switches += 1;
    }

    pub fn return_to_optimality(&mut self) {
        self.phase = Phase::Optimality;
        self.switches += 1;
    }
}
