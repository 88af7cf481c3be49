//! Local subproblems: SQP/SLP quadratic programs with optional trust region,
//! their elastic (ℓ1) variants, and the primal-dual interior-point step.

use crate::linalg::{
    assemble_kkt, convexify, dot, inertia_correct, qp_solve, solve_factorized, ActiveBound, LinalgError, Matrix,
    QpData, QpError, QpSolution, QpStatus, RegularizationSchedule,
};
use crate::model::Evaluations;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SubproblemError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("non-finite values in the subproblem")]
    NonFiniteEvaluation,
}

/// Primal-dual search direction.
///
/// Bound multipliers are split into `z_lower ≥ 0` and `z_upper ≥ 0`; the
/// dual steps `dz_*` are already scaled by `alpha_z`.
#[derive(Clone, Debug)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz_lower: Vec<f64>,
    pub dz_upper: Vec<f64>,
    pub alpha_max: f64,
    pub alpha_z: f64,
    pub status: QpStatus,
    pub subproblem_objective: f64,
    /// Active bounds of the QP solution, for warm starts.
    pub active_set: Vec<ActiveBound>,
}

impl Direction {
    pub fn primal_norm_inf(&self) -> f64 {
        crate::linalg::norm_inf(&self.dx)
    }
}

/// How the Hessian of a QP subproblem is regularized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularization {
    None,
    /// `W + δ_w I` positive definite.
    Primal,
    /// `W + δ_w I` positive definite on the null space of the Jacobian.
    Reduced,
}

/// Returns the regularized Hessian and the `δ_w` used.
pub fn regularize_hessian(
    w: &Matrix,
    jacobian: &Matrix,
    mode: Regularization,
    schedule: &RegularizationSchedule,
    last_delta_w: f64,
) -> Result<(Matrix, f64), LinalgError> {
    let delta = match mode {
        Regularization::None => 0.0,
        Regularization::Primal => convexify(w, schedule, last_delta_w)?,
        Regularization::Reduced => inertia_correct(w, jacobian, schedule, last_delta_w, 1e-8)?.delta_w,
    };
    let mut w = w.clone();
    if delta > 0.0 {
        w.add_diagonal(delta);
    }
    Ok((w, delta))
}

/// Bounds on the step `d` from `lower ≤ x + d ≤ upper` and `‖d‖_∞ ≤ Δ`.
pub fn step_bounds(x: &[f64], lower: &[f64], upper: &[f64], trust_radius: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let radius = trust_radius.unwrap_or(f64::INFINITY);
    let lo = x.iter().zip(lower).map(|(x, l)| (l - x).max(-radius)).collect();
    let hi = x.iter().zip(upper).map(|(x, u)| (u - x).min(radius)).collect();
    (lo, hi)
}

/// The SQP subproblem
/// `min ½dᵀWd + ρ∇fᵀd  s.t.  ∇cᵀd = -c,  lower ≤ x + d ≤ upper,  ‖d‖_∞ ≤ Δ`.
///
/// `eval.hessian = None` gives the LP (`W = 0`). Returns the data and the
/// regularization applied to `W`.
#[allow(clippy::too_many_arguments)]
pub fn build_sqp_qp(
    eval: &Evaluations,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    rho: f64,
    trust_radius: Option<f64>,
    regularization: Regularization,
    schedule: &RegularizationSchedule,
    last_delta_w: f64,
) -> Result<(QpData, f64), LinalgError> {
    let n = x.len();
    let (w, delta_w) = match &eval.hessian {
        Some(h) => regularize_hessian(h, &eval.jac_c, regularization, schedule, last_delta_w)?,
        None => (Matrix::zeros(n, n), 0.0),
    };
    let (lo, hi) = step_bounds(x, lower, upper, trust_radius);
    Ok((
        QpData {
            w,
            g: eval.grad_f.iter().map(|g| rho * g).collect(),
            a: eval.jac_c.clone(),
            b: eval.c.iter().map(|c| -c).collect(),
            lower: lo,
            upper: hi,
        },
        delta_w,
    ))
}

/// The elastic subproblem over `(d, p, q)`:
/// `min ½dᵀWd + ρ∇fᵀd + eᵀp + eᵀq  s.t.  ∇cᵀd - p + q = -c,  p, q ≥ 0`
/// plus the step bounds on `d`. With `ρ = 0` this is the feasibility QP.
///
/// `w` is used as given (the caller regularizes it).
pub fn build_elastic_qp(
    eval: &Evaluations,
    w: Option<&Matrix>,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    rho: f64,
    trust_radius: Option<f64>,
) -> QpData {
    let n = x.len();
    let m = eval.c.len();
    let total = n + 2 * m;
    let mut big_w = Matrix::zeros(total, total);
    if let Some(w) = w {
        big_w.set_block(0, 0, w);
    }
    let mut g: Vec<f64> = eval.grad_f.iter().map(|g| rho * g).collect();
    g.extend(std::iter::repeat_n(1.0, 2 * m));
    let mut a = Matrix::zeros(m, total);
    a.set_block(0, 0, &eval.jac_c);
    for j in 0..m {
        a[(j, n + j)] = -1.0;
        a[(j, n + m + j)] = 1.0;
    }
    let (mut lo, mut hi) = step_bounds(x, lower, upper, trust_radius);
    lo.extend(std::iter::repeat_n(0.0, 2 * m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, 2 * m));
    QpData {
        w: big_w,
        g,
        a,
        b: eval.c.iter().map(|c| -c).collect(),
        lower: lo,
        upper: hi,
    }
}

/// Whether `∇cᵀd = -c` has a solution within the step bounds.
pub fn linearization_is_consistent(
    eval: &Evaluations,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    trust_radius: Option<f64>,
) -> Result<bool, QpError> {
    let n = x.len();
    let (lo, hi) = step_bounds(x, lower, upper, trust_radius);
    let qp = QpData {
        w: Matrix::zeros(n, n),
        g: vec![0.0; n],
        a: eval.jac_c.clone(),
        b: eval.c.iter().map(|c| -c).collect(),
        lower: lo,
        upper: hi,
    };
    Ok(qp_solve(&qp, None)?.status != QpStatus::Infeasible)
}

/// Turns a QP solution into a primal-dual direction for the first `n`
/// variables.
///
/// The new constraint multipliers are the QP equality multipliers. A bound
/// multiplier is kept only when its QP bound is the variable bound itself;
/// multipliers of active trust-region bounds are reset to zero.
#[allow(clippy::too_many_arguments)]
pub fn qp_direction(
    qp: &QpData,
    sol: &QpSolution,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    y: &[f64],
    z_lower: &[f64],
    z_upper: &[f64],
) -> Direction {
    let n = x.len();
    let mut dz_lower = vec![0.0; n];
    let mut dz_upper = vec![0.0; n];
    for i in 0..n {
        let zb = sol.multipliers_bounds[i];
        let mut zl = 0.0;
        let mut zu = 0.0;
        if zb > 0.0 && qp.lower[i] == lower[i] - x[i] {
            zl = zb;
        } else if zb < 0.0 && qp.upper[i] == upper[i] - x[i] {
            zu = -zb;
        }
        dz_lower[i] = zl - z_lower[i];
        dz_upper[i] = zu - z_upper[i];
    }
    Direction {
        dx: sol.d[..n].to_vec(),
        dy: sol.multipliers_eq.iter().zip(y).map(|(new, old)| new - old).collect(),
        dz_lower,
        dz_upper,
        alpha_max: 1.0,
        alpha_z: 1.0,
        status: sol.status,
        subproblem_objective: sol.objective_value,
        active_set: sol.active_set.clone(),
    }
}

/// Barrier parameter and fraction-to-boundary state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierState {
    pub mu: f64,
    pub tau: f64,
    pub delta_w: f64,
    pub delta_c: f64,
}

/// Constants of the monotone barrier update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierSchedule {
    pub kappa_epsilon: f64,
    pub kappa_mu: f64,
    pub theta_mu: f64,
    pub tau_min: f64,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self {
            kappa_epsilon: 10.0,
            kappa_mu: 0.2,
            theta_mu: 1.5,
            tau_min: 0.99,
        }
    }
}

impl BarrierState {
    pub fn new(mu: f64, tau_min: f64) -> Self {
        assert!(mu > 0.0);
        Self {
            mu,
            tau: tau_min.max(1.0 - mu),
            delta_w: 0.0,
            delta_c: 0.0,
        }
    }
}

/// Decreases `μ` when the barrier problem is solved to within `κ_ε μ`.
pub fn update_barrier_parameter(
    barrier: BarrierState,
    kkt_error: f64,
    epsilon: f64,
    schedule: &BarrierSchedule,
) -> BarrierState {
    let floor = epsilon / 10.0;
    if kkt_error > schedule.kappa_epsilon * barrier.mu || barrier.mu <= floor {
        return barrier;
    }
    let mu = floor.max((schedule.kappa_mu * barrier.mu).min(barrier.mu.powf(schedule.theta_mu)));
    BarrierState {
        mu,
        tau: schedule.tau_min.max(1.0 - mu),
        ..barrier
    }
}

/// Largest `α ∈ (0, 1]` with `s + α ds ≥ (1 - τ) s` for every component.
///
/// `s` must be positive. The closed-form value is shrunk until the
/// inequality holds in floating point.
pub fn fraction_to_boundary(s: &[f64], ds: &[f64], tau: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for (s, ds) in s.iter().zip(ds) {
        if *ds < 0.0 {
            alpha = alpha.min(-tau * s / ds);
        }
    }
    let holds = |a: f64| s.iter().zip(ds).all(|(s, ds)| s + a * ds >= (1.0 - tau) * s);
    while !holds(alpha) && alpha > 0.0 {
        alpha *= 1.0 - 4.0 * f64::EPSILON;
    }
    alpha
}

/// Moves `x` strictly inside finite bounds by at least
/// `min(κ₁ max(1, |bound|), κ₁ (u - l))`.
pub fn push_into_interior(x: &mut [f64], lower: &[f64], upper: &[f64], kappa1: f64) {
    for i in 0..x.len() {
        let (l, u) = (lower[i], upper[i]);
        let width = u - l;
        if l.is_finite() {
            let mut p = kappa1 * l.abs().max(1.0);
            if u.is_finite() {
                p = p.min(kappa1 * width);
            }
            x[i] = x[i].max(l + p);
        }
        if u.is_finite() {
            let mut p = kappa1 * u.abs().max(1.0);
            if l.is_finite() {
                p = p.min(kappa1 * width);
            }
            x[i] = x[i].min(u - p);
        }
    }
}

/// Strictly interior primal-dual point of a bound-constrained barrier problem.
#[derive(Clone, Copy, Debug)]
pub struct InteriorPoint<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z_lower: &'a [f64],
    pub z_upper: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl InteriorPoint<'_> {
    /// Gradient of the barrier term `-μ Σ log(x - l) - μ Σ log(u - x)`.
    pub fn barrier_gradient(&self, mu: f64) -> Vec<f64> {
        (0..self.x.len())
            .map(|i| {
                let mut g = 0.0;
                if self.lower[i].is_finite() {
                    g -= mu / (self.x[i] - self.lower[i]);
                }
                if self.upper[i].is_finite() {
                    g += mu / (self.upper[i] - self.x[i]);
                }
                g
            })
            .collect()
    }

    /// Diagonal `Σ = (X - L)⁻¹Z_L + (U - X)⁻¹Z_U`.
    pub fn sigma(&self) -> Vec<f64> {
        (0..self.x.len())
            .map(|i| {
                let mut s = 0.0;
                if self.lower[i].is_finite() {
                    s += self.z_lower[i] / (self.x[i] - self.lower[i]);
                }
                if self.upper[i].is_finite() {
                    s += self.z_upper[i] / (self.upper[i] - self.x[i]);
                }
                s
            })
            .collect()
    }
}

/// Primal-dual interior-point step from the symmetrized system
/// `[[W + Σ + δ_w I, ∇c], [∇cᵀ, -δ_c I]] (dx, -dy) = -(∇f - ∇c y + ∇ξ, c)`.
///
/// The bound multiplier steps are recovered from the linearized
/// complementarity rows and scaled by the dual fraction-to-boundary length.
pub fn ipm_solve_step(
    eval: &Evaluations,
    hessian: &Matrix,
    point: &InteriorPoint,
    barrier: &mut BarrierState,
    schedule: &RegularizationSchedule,
) -> Result<Direction, SubproblemError> {
    let n = point.x.len();
    let m = eval.c.len();
    let sigma = point.sigma();
    let mut h = hessian.clone();
    for (i, s) in sigma.iter().enumerate() {
        h[(i, i)] += s;
    }
    if !h.is_finite() {
        return Err(SubproblemError::NonFiniteEvaluation);
    }
    let barrier_gradient = point.barrier_gradient(barrier.mu);
    let jty = eval.jac_c.tr_mul_vec(point.y);
    let mut rhs = Vec::with_capacity(n + m);
    for i in 0..n {
        rhs.push(-(eval.grad_f[i] - jty[i] + barrier_gradient[i]));
    }
    rhs.extend(eval.c.iter().map(|c| -c));

    let delta_c = 1e-8 * barrier.mu.powf(0.25);
    let corrected = inertia_correct(&h, &eval.jac_c, schedule, barrier.delta_w, delta_c)?;
    barrier.delta_w = corrected.delta_w;
    barrier.delta_c = corrected.delta_c;
    let sol = solve_factorized(&corrected.factorization, &rhs)?;
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(SubproblemError::NonFiniteEvaluation);
    }
    let dx = sol[..n].to_vec();
    let dy: Vec<f64> = sol[n..].iter().map(|v| -v).collect();

    let mut dz_lower = vec![0.0; n];
    let mut dz_upper = vec![0.0; n];
    let mut s_primal = Vec::new();
    let mut ds_primal = Vec::new();
    let mut z_all = Vec::new();
    let mut dz_all = Vec::new();
    for i in 0..n {
        if point.lower[i].is_finite() {
            let s = point.x[i] - point.lower[i];
            dz_lower[i] = barrier.mu / s - point.z_lower[i] - point.z_lower[i] / s * dx[i];
            s_primal.push(s);
            ds_primal.push(dx[i]);
            z_all.push(point.z_lower[i]);
            dz_all.push(dz_lower[i]);
        }
        if point.upper[i].is_finite() {
            let s = point.upper[i] - point.x[i];
            dz_upper[i] = barrier.mu / s - point.z_upper[i] + point.z_upper[i] / s * dx[i];
            s_primal.push(s);
            ds_primal.push(-dx[i]);
            z_all.push(point.z_upper[i]);
            dz_all.push(dz_upper[i]);
        }
    }
    let alpha_max = fraction_to_boundary(&s_primal, &ds_primal, barrier.tau);
    let alpha_z = fraction_to_boundary(&z_all, &dz_all, barrier.tau);
    dz_lower.iter_mut().for_each(|v| *v *= alpha_z);
    dz_upper.iter_mut().for_each(|v| *v *= alpha_z);

    let objective = dot(&eval.grad_f, &dx) + dot(&barrier_gradient, &dx) + 0.5 * h.quadratic_form(&dx);
    Ok(Direction {
        dx,
        dy,
        dz_lower,
        dz_upper,
        alpha_max,
        alpha_z,
        status: QpStatus::Optimal,
        subproblem_objective: objective,
        active_set: Vec::new(),
    })
}

/// Residual of the full (unsymmetrized) primal-dual Newton system at a step;
/// used to validate the symmetrized solve. `dz_*` must be unscaled.
#[allow(clippy::too_many_arguments)]
pub fn primal_dual_newton_residual(
    eval: &Evaluations,
    hessian: &Matrix,
    point: &InteriorPoint,
    mu: f64,
    dx: &[f64],
    dy: &[f64],
    dz_lower: &[f64],
    dz_upper: &[f64],
) -> f64 {
    let n = dx.len();
    let wdx = hessian.mul_vec(dx);
    let jtdy = eval.jac_c.tr_mul_vec(dy);
    let jty = eval.jac_c.tr_mul_vec(point.y);
    let mut r: f64 = 0.0;
    for i in 0..n {
        let stat = wdx[i] - jtdy[i] - dz_lower[i] + dz_upper[i] + eval.grad_f[i] - jty[i] - point.z_lower[i]
            + point.z_upper[i];
        r = r.max(stat.abs());
        if point.lower[i].is_finite() {
            let s = point.x[i] - point.lower[i];
            r = r.max((point.z_lower[i] * dx[i] + s * dz_lower[i] - (mu - s * point.z_lower[i])).abs());
        }
        if point.upper[i].is_finite() {
            let s = point.upper[i] - point.x[i];
            r = r.max((-point.z_upper[i] * dx[i] + s * dz_upper[i] - (mu - s * point.z_upper[i])).abs());
        }
    }
    let jdx = eval.jac_c.mul_vec(dx);
    for (j, c) in eval.c.iter().enumerate() {
        r = r.max((jdx[j] + c).abs());
    }
    r
}

/// Assembles the saddle-point matrix of [`ipm_solve_step`] (for diagnostics).
pub fn interior_point_matrix(hessian: &Matrix, jacobian: &Matrix, point: &InteriorPoint, delta_w: f64, delta_c: f64) -> Matrix {
    let mut h = hessian.clone();
    for (i, s) in point.sigma().iter().enumerate() {
        h[(i, i)] += s;
    }
    assemble_kkt(&h, jacobian, delta_w, delta_c)
}
