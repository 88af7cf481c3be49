//! Evaluable nonlinear programs and the built-in test corpus.
//!
//! A model describes `min f(x)  s.t.  c_l ≤ c(x) ≤ c_u,  x_l ≤ x ≤ x_u`.
//! The solver itself only sees equality constraints `c(x) = 0`; see
//! [`crate::reformulation::to_equality_form`].

pub mod corpus;

use crate::linalg::Matrix;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use thiserror::Error;

pub use corpus::{corpus_entries, corpus_get, corpus_names, CorpusEntry};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("non-finite evaluation at the probe point")]
    NonFiniteEvaluation,
    #[error("inconsistent bounds on constraint {0}")]
    InconsistentBounds(usize),
}

pub trait Model: Send + Sync {
    fn name(&self) -> &str;
    fn num_variables(&self) -> usize;
    fn num_constraints(&self) -> usize;
    /// Lower and upper variable bounds (infinite entries allowed).
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>);
    /// Lower and upper constraint bounds; equal entries denote equalities.
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.num_constraints();
        (vec![0.0; m], vec![0.0; m])
    }
    fn initial_point(&self) -> Vec<f64>;
    fn objective(&self, x: &[f64]) -> f64;
    fn constraints(&self, x: &[f64]) -> Vec<f64>;
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Dense `m×n` Jacobian; row `j` is `∇c_j(x)ᵀ`.
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix;
    /// `ρ∇²f(x) - Σ y_j ∇²c_j(x)`, exactly symmetric.
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix;
    /// Flags constraints whose Jacobian rows are constant.
    fn linear_constraints(&self) -> Vec<bool> {
        vec![false; self.num_constraints()]
    }
}

impl<M: Model + ?Sized> Model for Arc<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn num_variables(&self) -> usize {
        (**self).num_variables()
    }
    fn num_constraints(&self) -> usize {
        (**self).num_constraints()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (**self).variable_bounds()
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (**self).constraint_bounds()
    }
    fn initial_point(&self) -> Vec<f64> {
        (**self).initial_point()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (**self).objective(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (**self).constraints(x)
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).objective_gradient(x)
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix {
        (**self).constraint_jacobian(x)
    }
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix {
        (**self).lagrangian_hessian(x, rho, y)
    }
    fn linear_constraints(&self) -> Vec<bool> {
        (**self).linear_constraints()
    }
}

/// Function values and derivatives at one point.
#[derive(Clone, Debug)]
pub struct Evaluations {
    pub f: f64,
    pub c: Vec<f64>,
    pub grad_f: Vec<f64>,
    pub jac_c: Matrix,
    pub hessian: Option<Matrix>,
    pub is_finite: bool,
}

pub fn evaluate(model: &dyn Model, x: &[f64], rho: f64, y: &[f64], with_hessian: bool) -> Evaluations {
    assert_eq!(x.len(), model.num_variables());
    assert_eq!(y.len(), model.num_constraints());
    let f = model.objective(x);
    let c = model.constraints(x);
    let grad_f = model.objective_gradient(x);
    let jac_c = model.constraint_jacobian(x);
    let hessian = with_hessian.then(|| model.lagrangian_hessian(x, rho, y));
    let is_finite = f.is_finite()
        && c.iter().all(|v| v.is_finite())
        && grad_f.iter().all(|v| v.is_finite())
        && jac_c.is_finite()
        && hessian.as_ref().is_none_or(Matrix::is_finite);
    Evaluations {
        f,
        c,
        grad_f,
        jac_c,
        hessian,
        is_finite,
    }
}

/// Largest relative errors between analytic and central-difference derivatives.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DerivativeReport {
    pub gradient: f64,
    pub jacobian: f64,
    pub hessian: f64,
}

impl DerivativeReport {
    pub const TOLERANCE: f64 = 1e-5;

    pub fn max_error(&self) -> f64 {
        self.gradient.max(self.jacobian).max(self.hessian)
    }

    pub fn passes(&self) -> bool {
        self.max_error() <= Self::TOLERANCE
    }
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

/// Compares hand-coded derivatives with central differences using steps
/// `h_i = h·(1 + |x_i|)`. Hessians are checked for the objective alone and
/// for each constraint alone.
pub fn check_derivatives(model: &dyn Model, x: &[f64], h: f64) -> Result<DerivativeReport, ModelError> {
    let n = model.num_variables();
    let m = model.num_constraints();
    let mut report = DerivativeReport::default();
    let g = model.objective_gradient(x);
    let jac = model.constraint_jacobian(x);
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let hi = h * (1.0 + x[i].abs());
        probe[i] = x[i] + hi;
        let (fp, cp, gp, jp) = (
            model.objective(&probe),
            model.constraints(&probe),
            model.objective_gradient(&probe),
            model.constraint_jacobian(&probe),
        );
        probe[i] = x[i] - hi;
        let (fm, cm, gm, jm) = (
            model.objective(&probe),
            model.constraints(&probe),
            model.objective_gradient(&probe),
            model.constraint_jacobian(&probe),
        );
        probe[i] = x[i];
        let finite = fp.is_finite()
            && fm.is_finite()
            && cp.iter().chain(&cm).chain(&gp).chain(&gm).all(|v| v.is_finite())
            && jp.is_finite()
            && jm.is_finite();
        if !finite {
            return Err(ModelError::NonFiniteEvaluation);
        }
        report.gradient = report.gradient.max(relative_error(g[i], (fp - fm) / (2.0 * hi)));
        for j in 0..m {
            report.jacobian = report.jacobian.max(relative_error(jac[(j, i)], (cp[j] - cm[j]) / (2.0 * hi)));
        }
        columns.push((hi, gp, gm, jp, jm));
    }
    let zero_y = vec![0.0; m];
    let hf = model.lagrangian_hessian(x, 1.0, &zero_y);
    for (i, (hi, gp, gm, _, _)) in columns.iter().enumerate() {
        for k in 0..n {
            report.hessian = report.hessian.max(relative_error(hf[(k, i)], (gp[k] - gm[k]) / (2.0 * hi)));
        }
    }
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = -1.0;
        let hc = model.lagrangian_hessian(x, 0.0, &e);
        for (i, (hi, _, _, jp, jm)) in columns.iter().enumerate() {
            for k in 0..n {
                let numeric = (jp[(j, k)] - jm[(j, k)]) / (2.0 * hi);
                report.hessian = report.hessian.max(relative_error(hc[(k, i)], numeric));
            }
        }
    }
    if !report.gradient.is_finite() || !report.jacobian.is_finite() || !report.hessian.is_finite() {
        return Err(ModelError::NonFiniteEvaluation);
    }
    Ok(report)
}

/// Number of calls of each evaluation routine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvaluationCounts {
    pub objective: usize,
    pub constraints: usize,
    pub gradient: usize,
    pub jacobian: usize,
    pub hessian: usize,
}

/// Wraps a model and counts every evaluation call.
pub struct CountingModel<M> {
    inner: M,
    objective: AtomicUsize,
    constraints: AtomicUsize,
    gradient: AtomicUsize,
    jacobian: AtomicUsize,
    hessian: AtomicUsize,
}

impl<M: Model> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            objective: AtomicUsize::new(0),
            constraints: AtomicUsize::new(0),
            gradient: AtomicUsize::new(0),
            jacobian: AtomicUsize::new(0),
            hessian: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> EvaluationCounts {
        EvaluationCounts {
            objective: self.objective.load(Ordering::Relaxed),
            constraints: self.constraints.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            jacobian: self.jacobian.load(Ordering::Relaxed),
            hessian: self.hessian.load(Ordering::Relaxed),
        }
    }
}

impl<M: Model> Model for CountingModel<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn num_variables(&self) -> usize {
        self.inner.num_variables()
    }
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.variable_bounds()
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.constraint_bounds()
    }
    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.objective.fetch_add(1, Ordering::Relaxed);
        self.inner.objective(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.fetch_add(1, Ordering::Relaxed);
        self.inner.constraints(x)
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient.fetch_add(1, Ordering::Relaxed);
        self.inner.objective_gradient(x)
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix {
        self.jacobian.fetch_add(1, Ordering::Relaxed);
        self.inner.constraint_jacobian(x)
    }
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix {
        self.hessian.fetch_add(1, Ordering::Relaxed);
        self.inner.lagrangian_hessian(x, rho, y)
    }
    fn linear_constraints(&self) -> Vec<bool> {
        self.inner.linear_constraints()
    }
}

/// Model assembled from plain functions; used by the corpus and handy for tests.
#[derive(Clone)]
pub struct FnModel {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub c_lower: Vec<f64>,
    pub c_upper: Vec<f64>,
    pub x0: Vec<f64>,
    pub linear: Vec<bool>,
    pub f: fn(&[f64]) -> f64,
    pub grad: fn(&[f64]) -> Vec<f64>,
    pub c: fn(&[f64]) -> Vec<f64>,
    pub jac: fn(&[f64]) -> Matrix,
    pub hess: fn(&[f64], f64, &[f64]) -> Matrix,
}

impl Model for FnModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn num_variables(&self) -> usize {
        self.x0.len()
    }
    fn num_constraints(&self) -> usize {
        self.c_lower.len()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.c_lower.clone(), self.c_upper.clone())
    }
    fn initial_point(&self) -> Vec<f64> {
        self.x0.clone()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        (self.c)(x)
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix {
        (self.jac)(x)
    }
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix {
        (self.hess)(x, rho, y)
    }
    fn linear_constraints(&self) -> Vec<bool> {
        self.linear.clone()
    }
}
