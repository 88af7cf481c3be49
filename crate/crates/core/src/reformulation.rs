//! Model transformations: slack reformulation, gradient-based scaling and the
//! smooth elastic form of the ℓ1-relaxed and ℓ1 feasibility problems.

use crate::linalg::{norm_inf, Matrix};
use crate::model::{Model, ModelError};
use std::sync::Arc;

/// Equality-constrained view of a model with range constraints.
///
/// Each inequality `l_j ≤ c̃_j(x) ≤ u_j` becomes `c̃_j(x) - s_j = 0` with a
/// slack `s_j ∈ [l_j, u_j]` appended after the original variables; an
/// equality `c̃_j(x) = v_j` becomes `c̃_j(x) - v_j = 0`.
pub struct EqualityModel {
    inner: Arc<dyn Model>,
    n_original: usize,
    /// Slack index (relative to the slack block) for each inequality row.
    slack_of_row: Vec<Option<usize>>,
    /// Constant subtracted from equality rows.
    offset: Vec<f64>,
    slack_lower: Vec<f64>,
    slack_upper: Vec<f64>,
}

pub fn to_equality_form(model: Arc<dyn Model>) -> Result<EqualityModel, ModelError> {
    let (cl, cu) = model.constraint_bounds();
    let m = model.num_constraints();
    let mut slack_of_row = Vec::with_capacity(m);
    let mut offset = vec![0.0; m];
    let mut slack_lower = Vec::new();
    let mut slack_upper = Vec::new();
    for j in 0..m {
        if cl[j] > cu[j] || cl[j].is_nan() || cu[j].is_nan() {
            return Err(ModelError::InconsistentBounds(j));
        }
        if cl[j] == cu[j] {
            slack_of_row.push(None);
            offset[j] = cl[j];
        } else {
            slack_of_row.push(Some(slack_lower.len()));
            slack_lower.push(cl[j]);
            slack_upper.push(cu[j]);
        }
    }
    Ok(EqualityModel {
        n_original: model.num_variables(),
        inner: model,
        slack_of_row,
        offset,
        slack_lower,
        slack_upper,
    })
}

impl EqualityModel {
    pub fn inner(&self) -> &Arc<dyn Model> {
        &self.inner
    }

    pub fn num_original_variables(&self) -> usize {
        self.n_original
    }

    pub fn num_slacks(&self) -> usize {
        self.slack_lower.len()
    }

    /// Slack values `clamp(c̃(x), l, u)` for the original variables `x`.
    pub fn slack_values(&self, x: &[f64]) -> Vec<f64> {
        if self.num_slacks() == 0 {
            return Vec::new();
        }
        let c = self.inner.constraints(x);
        self.slacks_from_constraints(&c)
    }

    fn slacks_from_constraints(&self, c: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.num_slacks()];
        for (j, slot) in self.slack_of_row.iter().enumerate() {
            if let Some(k) = slot {
                s[*k] = c[j].max(self.slack_lower[*k]).min(self.slack_upper[*k]);
            }
        }
        s
    }

    /// Extends original variables with slack values.
    pub fn extend_point(&self, x: &[f64]) -> Vec<f64> {
        let mut full = x.to_vec();
        full.extend(self.slack_values(x));
        full
    }
}

impl Model for EqualityModel {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn num_variables(&self) -> usize {
        self.n_original + self.num_slacks()
    }
    fn num_constraints(&self) -> usize {
        self.slack_of_row.len()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut l, mut u) = self.inner.variable_bounds();
        l.extend_from_slice(&self.slack_lower);
        u.extend_from_slice(&self.slack_upper);
        (l, u)
    }
    fn initial_point(&self) -> Vec<f64> {
        self.extend_point(&self.inner.initial_point())
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(&x[..self.n_original])
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.inner.constraints(&x[..self.n_original]);
        for (j, slot) in self.slack_of_row.iter().enumerate() {
            match slot {
                Some(k) => c[j] -= x[self.n_original + k],
                None => c[j] -= self.offset[j],
            }
        }
        c
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.objective_gradient(&x[..self.n_original]);
        g.resize(self.num_variables(), 0.0);
        g
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix {
        let j0 = self.inner.constraint_jacobian(&x[..self.n_original]);
        let m = self.num_constraints();
        let mut j = Matrix::zeros(m, self.num_variables());
        j.set_block(0, 0, &j0);
        for (r, slot) in self.slack_of_row.iter().enumerate() {
            if let Some(k) = slot {
                j[(r, self.n_original + k)] = -1.0;
            }
        }
        j
    }
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix {
        let h0 = self.inner.lagrangian_hessian(&x[..self.n_original], rho, y);
        if self.num_slacks() == 0 {
            return h0;
        }
        let n = self.num_variables();
        let mut h = Matrix::zeros(n, n);
        h.set_block(0, 0, &h0);
        h
    }
    fn linear_constraints(&self) -> Vec<bool> {
        self.inner.linear_constraints()
    }
}

/// Positive scaling factors applied to the objective and each constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFactors {
    pub s_f: f64,
    pub s_c: Vec<f64>,
    pub s_max: f64,
}

impl ScalingFactors {
    pub fn identity(m: usize) -> Self {
        Self {
            s_f: 1.0,
            s_c: vec![1.0; m],
            s_max: f64::INFINITY,
        }
    }

    fn factor(s_max: f64, gradient_norm: f64) -> f64 {
        if gradient_norm == 0.0 {
            1.0
        } else {
            (s_max / gradient_norm).min(1.0)
        }
    }
}

/// Model whose objective and constraints are multiplied by fixed factors.
pub struct ScaledModel<M> {
    inner: M,
    factors: ScalingFactors,
}

impl<M: Model> ScaledModel<M> {
    pub fn new(inner: M, factors: ScalingFactors) -> Self {
        assert_eq!(factors.s_c.len(), inner.num_constraints());
        Self { inner, factors }
    }

    pub fn factors(&self) -> &ScalingFactors {
        &self.factors
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

/// Computes scaling factors from the gradients at `x0` and wraps the model.
pub fn scale_functions<M: Model>(model: M, x0: &[f64], s_max: f64) -> Result<(ScaledModel<M>, ScalingFactors), ModelError> {
    let g = model.objective_gradient(x0);
    let j = model.constraint_jacobian(x0);
    if !g.iter().all(|v| v.is_finite()) || !j.is_finite() {
        return Err(ModelError::NonFiniteEvaluation);
    }
    let factors = ScalingFactors {
        s_f: ScalingFactors::factor(s_max, norm_inf(&g)),
        s_c: (0..j.rows()).map(|r| ScalingFactors::factor(s_max, norm_inf(j.row(r)))).collect(),
        s_max,
    };
    Ok((ScaledModel::new(model, factors.clone()), factors))
}

impl<M: Model> Model for ScaledModel<M> {
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
        let (l, u) = self.inner.constraint_bounds();
        let s = &self.factors.s_c;
        (
            l.iter().zip(s).map(|(v, s)| v * s).collect(),
            u.iter().zip(s).map(|(v, s)| v * s).collect(),
        )
    }
    fn initial_point(&self) -> Vec<f64> {
        self.inner.initial_point()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.factors.s_f * self.inner.objective(x)
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.inner.constraints(x);
        c.iter_mut().zip(&self.factors.s_c).for_each(|(v, s)| *v *= s);
        c
    }
    fn objective_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.inner.objective_gradient(x);
        g.iter_mut().for_each(|v| *v *= self.factors.s_f);
        g
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Matrix {
        let mut j = self.inner.constraint_jacobian(x);
        for (r, s) in self.factors.s_c.iter().enumerate() {
            j.row_mut(r).iter_mut().for_each(|v| *v *= s);
        }
        j
    }
    fn lagrangian_hessian(&self, x: &[f64], rho: f64, y: &[f64]) -> Matrix {
        let ys: Vec<f64> = y.iter().zip(&self.factors.s_c).map(|(v, s)| v * s).collect();
        self.inner.lagrangian_hessian(x, rho * self.factors.s_f, &ys)
    }
    fn linear_constraints(&self) -> Vec<bool> {
        self.inner.linear_constraints()
    }
}

/// Positive and negative parts of the constraint values.
pub fn elastic_init(c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (
        c.iter().map(|v| v.max(0.0)).collect(),
        c.iter().map(|v| (-v).max(0.0)).collect(),
    )
}

/// Smooth reformulation of `min ρ f(x) + ‖c(x)‖₁`:
/// `min ρ f(x) + eᵀu⁺ + eᵀu⁻  s.t.  c(x) - u⁺ + u⁻ = 0,  u⁺, u⁻ ≥ 0`.
///
/// Variables are ordered `(x, u⁺, u⁻)`. With `ρ = 0` the objective of the
/// base model is never evaluated.
pub struct ElasticModel<M> {
    base: M,
    rho: f64,
}

pub fn make_l1_relaxed<M: Model>(model: M, rho: f64) -> ElasticModel<M> {
    assert!(rho >= 0.0);
    ElasticModel { base: model, rho }
}

impl<M: Model> ElasticModel<M> {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn set_rho(&mut self, rho: f64) {
        assert!(rho >= 0.0);
        self.rho = rho;
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn num_base_variables(&self) -> usize {
        self.base.num_variables()
    }

    /// `(x, u⁺, u⁻)` with elastics from [`elastic_init`] at `x`.
    pub fn elastic_point(&self, x: &[f64]) -> Vec<f64> {
        let (up, um) = elastic_init(&self.base.constraints(x));
        let mut v = x.to_vec();
        v.extend(up);
        v.extend(um);
        v
    }
}

impl<M: Model> Model for ElasticModel<M> {
    fn name(&self) -> &str {
        self.base.name()
    }
    fn num_variables(&self) -> usize {
        self.base.num_variables() + 2 * self.base.num_constraints()
    }
    fn num_constraints(&self) -> usize {
        self.base.num_constraints()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut l, mut u) = self.base.variable_bounds();
        let m2 = 2 * self.base.num_constraints();
        l.extend(std::iter::repeat_n(0.0, m2));
        u.extend(std::iter::repeat_n(f64::INFINITY, m2));
        (l, u)
    }
    fn initial_point(&self) -> Vec<f64> {
        self.elastic_point(&self.base.initial_point())
    }
    fn objective(&self, v: &[f64]) -> f64 {
        let n = self.base.num_variables();
        let elastic: f64 = v[n..].iter().sum();
        if self.rho == 0.0 {
            elastic
        } else {
            self.rho * self.base.objective(&v[..n]) + elastic
        }
    }
    fn constraints(&self, v: &[f64]) -> Vec<f64> {
        let n = self.base.num_variables();
        let m = self.base.num_constraints();
        let mut c = self.base.constraints(&v[..n]);
        for j in 0..m {
            c[j] += -v[n + j] + v[n + m + j];
        }
        c
    }
    fn objective_gradient(&self, v: &[f64]) -> Vec<f64> {
        let n = self.base.num_variables();
        let m = self.base.num_constraints();
        let mut g = if self.rho == 0.0 {
            vec![0.0; n]
        } else {
            let mut g = self.base.objective_gradient(&v[..n]);
            g.iter_mut().for_each(|x| *x *= self.rho);
            g
        };
        g.extend(std::iter::repeat_n(1.0, 2 * m));
        g
    }
    fn constraint_jacobian(&self, v: &[f64]) -> Matrix {
        let n = self.base.num_variables();
        let m = self.base.num_constraints();
        let j0 = self.base.constraint_jacobian(&v[..n]);
        let mut j = Matrix::zeros(m, n + 2 * m);
        j.set_block(0, 0, &j0);
        for r in 0..m {
            j[(r, n + r)] = -1.0;
            j[(r, n + m + r)] = 1.0;
        }
        j
    }
    fn lagrangian_hessian(&self, v: &[f64], rho: f64, y: &[f64]) -> Matrix {
        let n = self.base.num_variables();
        let total = self.num_variables();
        let h0 = self.base.lagrangian_hessian(&v[..n], rho * self.rho, y);
        let mut h = Matrix::zeros(total, total);
        h.set_block(0, 0, &h0);
        h
    }
    fn linear_constraints(&self) -> Vec<bool> {
        self.base.linear_constraints()
    }
}
