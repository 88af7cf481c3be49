//! The outer loop: preprocessing, composition of the four ingredients,
//! termination and result reporting.

mod ipm;
pub mod options;
mod sqp;

pub use options::{
    near_misses, parse_option_file, preset_options, resolve_options, validate, MechanismKind, Options, OptionsError,
    RelaxationKind, SolverConfig, StrategyKind, SubproblemKind, DEFAULTS, PRESETS, RESTORATION_MERIT_WARNING,
};

use crate::globalization::Filter;
use crate::linalg::{
    assemble_kkt, ldlt_factorize, norm_1, norm_inf, qp_solve, solve_factorized, Inertia, Matrix, QpData, QpStatus,
};
use crate::mechanism::TrustRegionConfig;
use crate::model::{CountingModel, EvaluationCounts, Evaluations, Model, ModelError};
use crate::reformulation::{scale_functions, to_equality_form, ScaledModel, ScalingFactors};
use crate::relaxation::{l1_sign_residual, lagrangian_gradient, Phase, PhaseState, SteeringCheck, SteeringState};
use crate::subproblem::{push_into_interior, BarrierState};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    FeasibleKkt,
    FeasibleFj,
    InfeasibleStationary,
    SmallTrustRegion,
    LooseToleranceKkt,
    IterationLimit,
    EvaluationError,
    /// The globalization mechanism could not produce an acceptable step.
    StepFailure,
    /// The linear constraints have no solution within the bounds.
    InfeasibleLinearConstraints,
}

impl Status {
    pub const ALL: [Status; 9] = [
        Status::FeasibleKkt,
        Status::FeasibleFj,
        Status::InfeasibleStationary,
        Status::SmallTrustRegion,
        Status::LooseToleranceKkt,
        Status::IterationLimit,
        Status::EvaluationError,
        Status::StepFailure,
        Status::InfeasibleLinearConstraints,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::FeasibleKkt => "FeasibleKKT",
            Status::FeasibleFj => "FeasibleFJ",
            Status::InfeasibleStationary => "InfeasibleStationary",
            Status::SmallTrustRegion => "SmallTrustRegion",
            Status::LooseToleranceKkt => "LooseToleranceKKT",
            Status::IterationLimit => "IterationLimit",
            Status::EvaluationError => "EvaluationError",
            Status::StepFailure => "StepFailure",
            Status::InfeasibleLinearConstraints => "InfeasibleLinearConstraints",
        }
    }

    /// Whether the run counts as solved. Infeasibility certificates count
    /// only when the problem is known to be infeasible.
    pub fn is_success(&self, expected_infeasible: bool) -> bool {
        match self {
            Status::FeasibleKkt | Status::LooseToleranceKkt => !expected_infeasible,
            Status::InfeasibleStationary | Status::InfeasibleLinearConstraints => expected_infeasible,
            _ => false,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Status::ALL
            .iter()
            .find(|st| st.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown status `{s}`"))
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Options(#[from] OptionsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Termination residuals in the original (unscaled) problem.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.complementarity)
    }
}

/// Residuals of the infeasibility certificate: stationarity of `‖c‖₁`
/// and the sign conditions on violated constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InfeasibilityResiduals {
    pub stationarity: f64,
    pub complementarity: f64,
    pub sign: f64,
}

impl InfeasibilityResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.complementarity).max(self.sign)
    }
}

/// Counter for the loose-tolerance rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LooseToleranceWindow {
    pub factor: f64,
    pub required: usize,
    pub count: usize,
}

impl LooseToleranceWindow {
    pub fn new(factor: f64, required: usize) -> Self {
        Self {
            factor,
            required,
            count: 0,
        }
    }
}

/// Decides termination from the residuals of the current iterate.
///
/// `at_minimum_rho` marks an objective multiplier that can no longer be
/// decreased; a feasible stationary point is then a Fritz John point.
pub fn check_termination(
    kkt: &Residuals,
    infeasibility: Option<&InfeasibilityResiduals>,
    at_minimum_rho: bool,
    epsilon: f64,
    window: &mut LooseToleranceWindow,
) -> Option<Status> {
    if kkt.max() <= epsilon {
        return Some(if at_minimum_rho { Status::FeasibleFj } else { Status::FeasibleKkt });
    }
    if kkt.feasibility > epsilon && infeasibility.is_some_and(|r| r.max() <= epsilon) {
        return Some(Status::InfeasibleStationary);
    }
    if kkt.max() <= window.factor * epsilon && !at_minimum_rho {
        window.count += 1;
        if window.count >= window.required {
            return Some(Status::LooseToleranceKkt);
        }
    } else {
        window.count = 0;
    }
    None
}

/// One row of the iteration log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    /// Infeasibility `‖c‖₁` of the solver's (scaled) model.
    pub eta: f64,
    /// Objective of the solver's model, if evaluated.
    pub objective: Option<f64>,
    pub rho: f64,
    pub mu: Option<f64>,
    pub radius: Option<f64>,
    pub alpha: f64,
    pub step_norm: f64,
    pub filter_size: usize,
    /// Iterate in the equality-form variables (without elastics).
    pub x: Vec<f64>,
}

/// Invariants of one accepted interior-point iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierCheck {
    pub iteration: usize,
    /// Primal iterate strictly inside its finite bounds and bound multipliers positive.
    pub strictly_interior: bool,
    /// `x̂ - l ≥ (1 - τ)(x - l)`, `u - x̂ ≥ (1 - τ)(u - x)` and `ẑ ≥ (1 - τ)z`.
    pub fraction_to_boundary: bool,
    /// Largest linearized complementarity residual of the recovered `dz`.
    pub complementarity_residual: f64,
}

impl BarrierCheck {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.strictly_interior && self.fraction_to_boundary && self.complementarity_residual <= tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub history: Vec<IterationRecord>,
    pub steering_checks: Vec<SteeringCheck>,
    pub barrier_checks: Vec<BarrierCheck>,
    pub warnings: Vec<String>,
    /// Filter entries at termination.
    pub filter: Vec<(f64, f64)>,
    pub phase_switches: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Original variables.
    pub x: Vec<f64>,
    /// Slacks of the inequality constraints.
    pub slacks: Vec<f64>,
    /// Constraint multipliers, normalized to the objective multiplier `rho`.
    pub y: Vec<f64>,
    /// Signed bound multipliers `z_lower - z_upper` over `(x, slacks)`.
    pub z: Vec<f64>,
    /// Objective multiplier (0 for infeasibility certificates).
    pub rho: f64,
    pub objective: f64,
    /// `‖c(x)‖₁` of the equality form.
    pub infeasibility: f64,
    pub iterations: usize,
    pub counts: EvaluationCounts,
    pub subproblem_solves: usize,
    pub residuals: Residuals,
    pub infeasibility_residuals: Option<InfeasibilityResiduals>,
    pub function_scaling: f64,
    pub diagnostics: Diagnostics,
}

/// Projects `x0` onto the bounds and then onto the linear constraints by the
/// proximal QP `min ½‖d‖² s.t. linear rows of c(x0 + d) = 0, l ≤ x0 + d ≤ u`.
///
/// `model` must be in equality form. Returns `None` if the linear
/// constraints are inconsistent within the bounds.
pub fn preprocess_initial_point(model: &dyn Model, x0: &[f64]) -> Option<Vec<f64>> {
    let (lower, upper) = model.variable_bounds();
    let x: Vec<f64> = x0
        .iter()
        .zip(lower.iter().zip(&upper))
        .map(|(x, (l, u))| x.max(*l).min(*u))
        .collect();
    let rows: Vec<usize> = model
        .linear_constraints()
        .iter()
        .enumerate()
        .filter_map(|(j, lin)| lin.then_some(j))
        .collect();
    if rows.is_empty() {
        return Some(x);
    }
    let n = x.len();
    let c = model.constraints(&x);
    let jac = model.constraint_jacobian(&x);
    let all: Vec<usize> = (0..n).collect();
    let qp = QpData {
        w: Matrix::identity(n),
        g: vec![0.0; n],
        a: jac.select(&rows, &all),
        b: rows.iter().map(|&j| -c[j]).collect(),
        lower: lower.iter().zip(&x).map(|(l, x)| l - x).collect(),
        upper: upper.iter().zip(&x).map(|(u, x)| u - x).collect(),
    };
    match qp_solve(&qp, None) {
        Ok(sol) if sol.status == QpStatus::Infeasible => None,
        Ok(sol) if sol.status == QpStatus::Optimal => Some(
            (0..n)
                .map(|i| (x[i] + sol.d[i]).max(lower[i]).min(upper[i]))
                .collect(),
        ),
        _ => Some(x),
    }
}

/// Least-squares multipliers from `[[I, ∇c], [∇cᵀ, 0]] (w, y) = (∇f - z, 0)`;
/// zero when the system is singular or the estimate exceeds `y_max`.
pub fn estimate_initial_multipliers(grad_f: &[f64], jac: &Matrix, z: &[f64], y_max: f64) -> Vec<f64> {
    let n = grad_f.len();
    let m = jac.rows();
    if m == 0 {
        return Vec::new();
    }
    let k = assemble_kkt(&Matrix::identity(n), jac, 0.0, 0.0);
    let fact = ldlt_factorize(&k);
    if fact.inertia() != Inertia::new(n, m, 0) {
        return vec![0.0; m];
    }
    let mut rhs: Vec<f64> = grad_f.iter().zip(z).map(|(g, z)| g - z).collect();
    rhs.extend(std::iter::repeat_n(0.0, m));
    match solve_factorized(&fact, &rhs) {
        Ok(sol) => {
            let y = sol[n..].to_vec();
            if y.iter().all(|v| v.is_finite()) && norm_inf(&y) <= y_max {
                y
            } else {
                vec![0.0; m]
            }
        }
        Err(_) => vec![0.0; m],
    }
}

/// Primal-dual point with the function values and first derivatives at `x`.
#[derive(Clone, Debug)]
pub(crate) struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub zl: Vec<f64>,
    pub zu: Vec<f64>,
    /// Objective value, evaluated lazily in restoration phases.
    pub f: Option<f64>,
    pub c: Vec<f64>,
    pub grad: Vec<f64>,
    pub jac: Matrix,
}

impl Point {
    pub fn eta(&self) -> f64 {
        norm_1(&self.c)
    }

    pub fn objective(&mut self, model: &dyn Model) -> f64 {
        *self.f.get_or_insert_with(|| model.objective(&self.x))
    }

    pub fn evaluations(&self, hessian: Option<Matrix>) -> Evaluations {
        Evaluations {
            f: self.f.unwrap_or(f64::NAN),
            c: self.c.clone(),
            grad_f: self.grad.clone(),
            jac_c: self.jac.clone(),
            hessian,
            is_finite: true,
        }
    }

    /// Re-evaluates the derivatives after `x`, `f` and `c` were updated.
    /// Returns false on non-finite values.
    pub fn update_derivatives(&mut self, model: &dyn Model) -> bool {
        self.grad = model.objective_gradient(&self.x);
        self.jac = model.constraint_jacobian(&self.x);
        self.grad.iter().all(|v| v.is_finite()) && self.jac.is_finite()
    }
}

/// Function values at a trial point; `None` if not finite.
pub(crate) fn trial_functions(model: &dyn Model, x: &[f64], with_objective: bool) -> Option<(Option<f64>, Vec<f64>)> {
    let c = model.constraints(x);
    if !c.iter().all(|v| v.is_finite()) {
        return None;
    }
    let f = if with_objective {
        let f = model.objective(x);
        if !f.is_finite() {
            return None;
        }
        Some(f)
    } else {
        None
    };
    Some((f, c))
}

pub(crate) fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(x, d)| x + alpha * d).collect()
}

/// Steps `x + αd` and projects onto the bounds (guards against roundoff).
pub(crate) fn step_in_bounds(x: &[f64], alpha: f64, d: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| (x[i] + alpha * d[i]).max(lower[i]).min(upper[i]))
        .collect()
}

/// Mutable state of one solve.
pub(crate) struct Solver {
    pub cfg: SolverConfig,
    pub model: Arc<dyn Model>,
    pub n: usize,
    pub m: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub scaling: ScalingFactors,
    pub pt: Point,
    pub rho: f64,
    pub phase: PhaseState,
    pub filter: Filter,
    pub theta_min: f64,
    pub tr: TrustRegionConfig,
    pub steering: SteeringState,
    pub barrier: BarrierState,
    pub last_delta_w: f64,
    pub window: LooseToleranceWindow,
    pub iteration: usize,
    pub subproblem_solves: usize,
    pub diag: Diagnostics,
    pub restoration: Option<ipm::Restoration>,
}

/// Step taken by one outer iteration.
pub(crate) struct StepSummary {
    pub alpha: f64,
    pub step_norm: f64,
    pub radius: Option<f64>,
}

impl Solver {
    pub fn sd(&self, y: &[f64], z_norm: f64, multiplier_scale: f64) -> f64 {
        let total = (norm_1(y) + z_norm) * multiplier_scale;
        (total / (self.cfg.residual_scaling_cap * (self.n + self.m).max(1) as f64)).max(1.0)
    }

    /// Original-space infeasibility `‖c / s_c‖₁`.
    pub fn original_infeasibility(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.scaling.s_c).map(|(c, s)| (c / s).abs()).sum()
    }

    fn complementarity(&self, x: &[f64], zl: &[f64], zu: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..x.len() {
            if self.lower[i].is_finite() {
                r = r.max((zl[i] * (x[i] - self.lower[i])).abs());
            }
            if self.upper[i].is_finite() {
                r = r.max((zu[i] * (self.upper[i] - x[i])).abs());
            }
        }
        r
    }

    /// KKT residuals of the original problem at the current point with
    /// objective multiplier `rho`.
    pub fn kkt_residuals(&self, rho: f64) -> Residuals {
        let p = &self.pt;
        let s_f = self.scaling.s_f;
        let y_scaled: Vec<f64> = p.y.iter().zip(&self.scaling.s_c).map(|(y, s)| y * s).collect();
        let sd = self.sd(&y_scaled, norm_1(&p.zl) + norm_1(&p.zu), 1.0 / s_f);
        let lag = lagrangian_gradient(&p.grad, &p.jac, rho, &p.y, &p.zl, &p.zu);
        Residuals {
            stationarity: norm_1(&lag) / s_f / sd,
            feasibility: self.original_infeasibility(&p.c),
            complementarity: self.complementarity(&p.x, &p.zl, &p.zu) / s_f / sd,
        }
    }

    /// Residuals of the infeasibility certificate (in the scaled constraints)
    /// for multipliers of the feasibility problem.
    pub fn infeasibility_residuals(
        &self,
        x: &[f64],
        c: &[f64],
        jac: &Matrix,
        y: &[f64],
        zl: &[f64],
        zu: &[f64],
    ) -> InfeasibilityResiduals {
        let sd = self.sd(y, norm_1(zl) + norm_1(zu), 1.0);
        let zero = vec![0.0; x.len()];
        let lag = lagrangian_gradient(&zero, jac, 0.0, y, zl, zu);
        InfeasibilityResiduals {
            stationarity: norm_1(&lag) / sd,
            complementarity: self.complementarity(x, zl, zu) / sd,
            sign: l1_sign_residual(y, c),
        }
    }

    pub fn theta_bounds(&self, eta0: f64) -> (f64, f64) {
        (
            self.cfg.filter_theta_min_factor * eta0.max(1.0),
            self.cfg.filter_eta_max_factor * eta0.max(1.0),
        )
    }

    pub fn new_filter(&self, eta_max: f64) -> Filter {
        let mut f = Filter::new(self.cfg.filter_beta, self.cfg.filter_gamma, eta_max);
        f.capacity = self.cfg.filter_capacity;
        f
    }

    pub fn record(&mut self, step: &StepSummary) {
        let (eta, objective, x) = match &self.restoration {
            Some(r) => (norm_1(&r.base_c()), None, r.pt.x[..self.n].to_vec()),
            None => (self.pt.eta(), self.pt.f, self.pt.x.clone()),
        };
        let mu = match (&self.restoration, self.cfg.subproblem) {
            (Some(r), _) => Some(r.barrier.mu),
            (None, SubproblemKind::PrimalDualIpm) => Some(self.barrier.mu),
            _ => None,
        };
        let filter_size = match &self.restoration {
            Some(r) => r.filter.len(),
            None => self.filter.len(),
        };
        self.diag.history.push(IterationRecord {
            iteration: self.iteration,
            phase: self.phase.phase,
            eta,
            objective,
            rho: self.rho,
            mu,
            radius: step.radius,
            alpha: step.alpha,
            step_norm: step.step_norm,
            filter_size,
            x,
        });
    }

    /// Re-estimates the constraint multipliers at the current point.
    pub fn reset_multipliers(&mut self) {
        let z: Vec<f64> = self.pt.zl.iter().zip(&self.pt.zu).map(|(l, u)| l - u).collect();
        let grad: Vec<f64> = self.pt.grad.iter().map(|g| g * self.rho).collect();
        self.pt.y = estimate_initial_multipliers(&grad, &self.pt.jac, &z, self.cfg.y_max);
    }

    /// Termination test at the current iterate.
    fn termination(&mut self) -> Option<(Status, Residuals, Option<InfeasibilityResiduals>)> {
        if let Some(r) = &self.restoration {
            let inf = r.infeasibility_residuals(self);
            let kkt = Residuals {
                stationarity: f64::INFINITY,
                feasibility: self.original_infeasibility(&r.base_c()),
                complementarity: f64::INFINITY,
            };
            let mut window = LooseToleranceWindow::new(0.0, usize::MAX);
            return check_termination(&kkt, Some(&inf), false, self.cfg.tolerance, &mut window)
                .map(|s| (s, kkt, Some(inf)));
        }
        let kkt = self.kkt_residuals(self.rho);
        let l1 = self.cfg.relaxation == RelaxationKind::L1Relaxation;
        let check_infeasible = l1 || self.phase.phase == Phase::Restoration;
        let inf = check_infeasible.then(|| {
            let p = &self.pt;
            self.infeasibility_residuals(&p.x, &p.c, &p.jac, &p.y, &p.zl, &p.zu)
        });
        let at_min = l1 && self.rho <= self.steering.rho_min;
        let mut window = self.window;
        let status = check_termination(&kkt, inf.as_ref(), at_min, self.cfg.tolerance, &mut window);
        if self.phase.phase == Phase::Optimality {
            self.window = window;
        }
        status.map(|s| (s, kkt, inf))
    }

    fn run(&mut self) -> (Status, Residuals, Option<InfeasibilityResiduals>) {
        loop {
            if let Some(done) = self.termination() {
                return done;
            }
            if self.iteration >= self.cfg.max_iterations {
                let kkt = self.kkt_residuals(self.rho);
                return (Status::IterationLimit, kkt, None);
            }
            self.iteration += 1;
            let step = match self.cfg.subproblem {
                SubproblemKind::PrimalDualIpm => self.ipm_iteration(),
                _ => self.sqp_iteration(),
            };
            match step {
                Ok(s) => self.record(&s),
                Err(status) => {
                    let kkt = self.kkt_residuals(self.rho);
                    let status = if status == Status::SmallTrustRegion && kkt.feasibility > self.cfg.tolerance {
                        Status::StepFailure
                    } else {
                        status
                    };
                    return (status, kkt, None);
                }
            }
        }
    }
}

fn failed_result(status: Status, n: usize, m: usize, counts: EvaluationCounts, warnings: Vec<String>) -> SolveResult {
    SolveResult {
        status,
        x: Vec::new(),
        slacks: Vec::new(),
        y: vec![0.0; m],
        z: vec![0.0; n],
        rho: 0.0,
        objective: f64::NAN,
        infeasibility: f64::NAN,
        iterations: 0,
        counts,
        subproblem_solves: 0,
        residuals: Residuals::default(),
        infeasibility_residuals: None,
        function_scaling: 1.0,
        diagnostics: Diagnostics {
            warnings,
            ..Default::default()
        },
    }
}

/// Validates the options and solves the model.
pub fn solve(model: Arc<dyn Model>, options: &Options) -> Result<SolveResult, SolveError> {
    let (cfg, warnings) = validate(options)?;
    solve_with_config(model, &cfg, warnings)
}

/// Solves the model with an already validated configuration.
pub fn solve_with_config(
    model: Arc<dyn Model>,
    cfg: &SolverConfig,
    warnings: Vec<String>,
) -> Result<SolveResult, SolveError> {
    let counting = Arc::new(CountingModel::new(model));
    let eq = Arc::new(to_equality_form(counting.clone() as Arc<dyn Model>)?);
    let n = eq.num_variables();
    let m = eq.num_constraints();
    let n_original = eq.num_original_variables();
    let (lower, upper) = eq.variable_bounds();
    let ipm = cfg.subproblem == SubproblemKind::PrimalDualIpm;

    let mut x0 = eq.initial_point();
    if cfg.project_initial_point {
        match preprocess_initial_point(eq.as_ref(), &x0) {
            Some(x) => x0 = x,
            None => {
                return Ok(failed_result(
                    Status::InfeasibleLinearConstraints,
                    n,
                    m,
                    counting.counts(),
                    warnings,
                ))
            }
        }
    } else {
        for i in 0..n {
            x0[i] = x0[i].max(lower[i]).min(upper[i]);
        }
    }
    if ipm {
        push_into_interior(&mut x0, &lower, &upper, cfg.barrier_push);
    }

    let (scaled, scaling): (Arc<dyn Model>, ScalingFactors) = if cfg.scale_functions {
        match scale_functions(eq.clone(), &x0, cfg.function_scaling_max) {
            Ok((s, factors)) => (Arc::new(s), factors),
            Err(_) => return Ok(failed_result(Status::EvaluationError, n, m, counting.counts(), warnings)),
        }
    } else {
        let identity = ScalingFactors::identity(m);
        (Arc::new(ScaledModel::new(eq.clone(), identity.clone())), identity)
    };

    let f0 = scaled.objective(&x0);
    let c0 = scaled.constraints(&x0);
    let mut pt = Point {
        x: x0,
        y: vec![0.0; m],
        zl: vec![0.0; n],
        zu: vec![0.0; n],
        f: Some(f0),
        c: c0,
        grad: Vec::new(),
        jac: Matrix::zeros(m, n),
    };
    let finite = f0.is_finite() && pt.c.iter().all(|v| v.is_finite()) && pt.update_derivatives(scaled.as_ref());
    if !finite {
        return Ok(failed_result(Status::EvaluationError, n, m, counting.counts(), warnings));
    }
    if ipm {
        for i in 0..n {
            if lower[i].is_finite() {
                pt.zl[i] = cfg.barrier_z_initial;
            }
            if upper[i].is_finite() {
                pt.zu[i] = cfg.barrier_z_initial;
            }
        }
    }

    let eta0 = pt.eta();
    let rho = match cfg.relaxation {
        RelaxationKind::L1Relaxation => cfg.steering.rho,
        RelaxationKind::FeasibilityRestoration => 1.0,
    };
    let mut solver = Solver {
        cfg: cfg.clone(),
        model: scaled,
        n,
        m,
        lower,
        upper,
        scaling,
        pt,
        rho,
        phase: PhaseState::default(),
        filter: Filter::new(0.5, 0.5, f64::INFINITY),
        theta_min: 0.0,
        tr: cfg.trust_region,
        steering: cfg.steering,
        barrier: BarrierState::new(cfg.barrier_mu_initial, cfg.barrier.tau_min),
        last_delta_w: 0.0,
        window: LooseToleranceWindow::new(cfg.loose_tolerance_factor, cfg.loose_tolerance_iterations),
        iteration: 0,
        subproblem_solves: 0,
        diag: Diagnostics {
            warnings,
            ..Default::default()
        },
        restoration: None,
    };
    let (theta_min, eta_max) = solver.theta_bounds(eta0);
    solver.theta_min = theta_min;
    solver.filter = solver.new_filter(eta_max);
    solver.reset_multipliers();

    let (status, residuals, infeasibility_residuals) = solver.run();
    if let Some(r) = solver.restoration.take() {
        r.leave(&mut solver);
    }

    let s_f = solver.scaling.s_f;
    let infeasible = status == Status::InfeasibleStationary;
    let (rho_out, y_factor) = if infeasible { (0.0, 1.0) } else { (solver.rho, 1.0 / s_f) };
    let p = &solver.pt;
    let y: Vec<f64> = p.y.iter().zip(&solver.scaling.s_c).map(|(y, s)| y * s * y_factor).collect();
    let z: Vec<f64> = p.zl.iter().zip(&p.zu).map(|(l, u)| (l - u) * y_factor).collect();
    let objective = match p.f {
        Some(f) => f / s_f,
        None => eq.objective(&p.x),
    };
    let infeasibility = solver.original_infeasibility(&p.c);
    solver.diag.filter = solver.filter.entries().to_vec();
    solver.diag.phase_switches = solver.phase.switches;
    Ok(SolveResult {
        status,
        x: p.x[..n_original].to_vec(),
        slacks: p.x[n_original..].to_vec(),
        y,
        z,
        rho: rho_out,
        objective,
        infeasibility,
        iterations: solver.iteration,
        counts: counting.counts(),
        subproblem_solves: solver.subproblem_solves,
        residuals,
        infeasibility_residuals,
        function_scaling: s_f,
        diagnostics: solver.diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_estimate_examples() {
        let jac = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let y = estimate_initial_multipliers(&[1.0, 0.0], &jac, &[0.0, 0.0], 1e3);
        assert!((y[0] - 1.0).abs() < 1e-14);
        let y = estimate_initial_multipliers(&[50.0, 0.0], &jac, &[0.0, 0.0], 10.0);
        assert_eq!(y, vec![0.0]);
        assert!(estimate_initial_multipliers(&[1.0], &Matrix::zeros(0, 1), &[0.0], 1e3).is_empty());
    }

    #[test]
    fn loose_window() {
        let r = Residuals {
            stationarity: 50e-6,
            feasibility: 0.0,
            complementarity: 0.0,
        };
        let mut w = LooseToleranceWindow::new(100.0, 15);
        for _ in 0..14 {
            assert_eq!(check_termination(&r, None, false, 1e-6, &mut w), None);
        }
        assert_eq!(check_termination(&r, None, false, 1e-6, &mut w), Some(Status::LooseToleranceKkt));
        let far = Residuals {
            stationarity: 1.0,
            ..r
        };
        let mut w = LooseToleranceWindow::new(100.0, 15);
        for _ in 0..10 {
            check_termination(&r, None, false, 1e-6, &mut w);
        }
        check_termination(&far, None, false, 1e-6, &mut w);
        assert_eq!(w.count, 0);
    }

    #[test]
    fn status_names_round_trip() {
        for s in Status::ALL {
            assert_eq!(s.as_str().parse::<Status>().unwrap(), s);
        }
    }
}
