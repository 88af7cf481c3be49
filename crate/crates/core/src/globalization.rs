//! Progress measures, predicted reductions, the ℓ1 merit test and filters.

use crate::linalg::{dot, norm_1, Matrix};

/// Infeasibility `η`, objective measure `ω = ρf` and auxiliary measure `ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgressMeasures {
    pub eta: f64,
    pub omega: f64,
    pub xi: f64,
}

impl ProgressMeasures {
    /// `ω + η + ξ`.
    pub fn merit(&self) -> f64 {
        self.omega + self.eta + self.xi
    }

    /// `ω + ξ`, the filter objective when `ω` was computed with `ρ = 1`.
    pub fn filter_objective(&self) -> f64 {
        self.omega + self.xi
    }

    pub fn is_finite(&self) -> bool {
        self.eta.is_finite() && self.omega.is_finite() && self.xi.is_finite()
    }
}

/// Barrier context for the auxiliary measure.
#[derive(Clone, Copy, Debug)]
pub struct BarrierContext<'a> {
    pub mu: f64,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

/// `-μ Σ log(x - l) - μ Σ log(u - x)` over finite bounds.
pub fn barrier_term(x: &[f64], ctx: &BarrierContext) -> f64 {
    let mut s = 0.0;
    for (i, xi) in x.iter().enumerate() {
        if ctx.lower[i].is_finite() {
            s -= (xi - ctx.lower[i]).ln();
        }
        if ctx.upper[i].is_finite() {
            s -= (ctx.upper[i] - xi).ln();
        }
    }
    ctx.mu * s
}

/// Measures at a point; `None` if any of them is not finite.
pub fn compute_measures(
    f: f64,
    c: &[f64],
    x: &[f64],
    rho: f64,
    barrier: Option<&BarrierContext>,
) -> Option<ProgressMeasures> {
    let m = ProgressMeasures {
        eta: norm_1(c),
        omega: if rho == 0.0 { 0.0 } else { rho * f },
        xi: barrier.map_or(0.0, |b| barrier_term(x, b)),
    };
    m.is_finite().then_some(m)
}

/// Which predicted-reduction model a strategy reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// First-order terms only.
    Linear,
    /// First- and second-order terms.
    Quadratic,
}

/// Local models of the measures along a fixed direction `d`, evaluated at
/// scaled steps `αd` by [`ReductionModel::at`].
#[derive(Clone, Debug)]
pub struct ReductionModel {
    pub kind: ModelKind,
    pub rho: f64,
    c: Vec<f64>,
    jd: Vec<f64>,
    objective_slope: f64,
    curvature: f64,
    barrier_slope: f64,
    barrier_curvature: f64,
}

/// Predicted reductions `Δη`, `Δω`, `Δξ` at one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionModels {
    pub d_eta: f64,
    pub d_omega: f64,
    pub d_xi: f64,
}

impl ReductionModels {
    /// Predicted reduction of the merit function.
    pub fn merit(&self) -> f64 {
        self.d_omega + self.d_eta + self.d_xi
    }

    /// Predicted reduction of the filter objective.
    pub fn filter_objective(&self) -> f64 {
        self.d_omega + self.d_xi
    }
}

impl ReductionModel {
    /// Model along `dx` with objective multiplier `rho` and Hessian `w`.
    pub fn new(kind: ModelKind, rho: f64, grad_f: &[f64], c: &[f64], jac: &Matrix, w: Option<&Matrix>, dx: &[f64]) -> Self {
        Self {
            kind,
            rho,
            c: c.to_vec(),
            jd: jac.mul_vec(dx),
            objective_slope: dot(grad_f, dx),
            curvature: w.map_or(0.0, |w| w.quadratic_form(dx)),
            barrier_slope: 0.0,
            barrier_curvature: 0.0,
        }
    }

    /// Adds the barrier model `-∇ξᵀd - ½dᵀΣd`.
    pub fn with_barrier(mut self, barrier_gradient: &[f64], sigma: &[f64], dx: &[f64]) -> Self {
        self.barrier_slope = -dot(barrier_gradient, dx);
        self.barrier_curvature = sigma.iter().zip(dx).map(|(s, d)| s * d * d).sum();
        self
    }

    pub fn at(&self, alpha: f64) -> ReductionModels {
        let eta0 = norm_1(&self.c);
        let eta1: f64 = self.c.iter().zip(&self.jd).map(|(c, jd)| (c + alpha * jd).abs()).sum();
        let quadratic = self.kind == ModelKind::Quadratic;
        let mut d_omega = -alpha * self.rho * self.objective_slope;
        let mut d_xi = alpha * self.barrier_slope;
        if quadratic {
            d_omega -= 0.5 * alpha * alpha * self.curvature;
            d_xi -= 0.5 * alpha * alpha * self.barrier_curvature;
        }
        ReductionModels {
            d_eta: eta0 - eta1,
            d_omega,
            d_xi,
        }
    }
}

/// Sufficient-decrease test `actual ≥ σ predicted`, tolerant to cancellation
/// in the actual reduction at the scale of `reference`.
pub fn sufficient_decrease(actual: f64, predicted: f64, sigma: f64, reference: f64) -> bool {
    actual + 10.0 * f64::EPSILON * reference.abs().max(1.0) >= sigma * predicted
}

/// Armijo test on the merit `φ_ρ = ω + η + ξ`. A zero step is always accepted.
pub fn merit_is_acceptable(
    current: &ProgressMeasures,
    trial: &ProgressMeasures,
    models: &ReductionModels,
    step_norm: f64,
    sigma: f64,
) -> bool {
    if step_norm == 0.0 {
        return true;
    }
    if !trial.is_finite() {
        return false;
    }
    sufficient_decrease(current.merit() - trial.merit(), models.merit(), sigma, current.merit())
}

/// A list of mutually non-dominated `(η, φ)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter {
    entries: Vec<(f64, f64)>,
    pub beta: f64,
    pub gamma: f64,
    eta_max: f64,
    pub capacity: usize,
}

impl Filter {
    pub fn new(beta: f64, gamma: f64, eta_max: f64) -> Self {
        assert!(beta > 0.0 && beta < 1.0 && gamma > 0.0);
        Self {
            entries: Vec::new(),
            beta,
            gamma,
            eta_max,
            capacity: 1000,
        }
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eta_max(&self) -> f64 {
        self.eta_max
    }

    /// Smallest infeasibility among the entries (`+∞` when empty).
    pub fn eta_min(&self) -> f64 {
        self.entries.iter().map(|e| e.0).fold(f64::INFINITY, f64::min)
    }

    /// Whether `(eta, phi)` lies outside the envelope of the entry `(eta_l, phi_l)`.
    pub fn envelope_accepts(&self, entry: (f64, f64), eta: f64, phi: f64) -> bool {
        let (eta_l, phi_l) = entry;
        phi <= phi_l - self.gamma * eta + 10.0 * f64::EPSILON * phi_l.abs().max(1.0) || eta < self.beta * eta_l
    }

    /// Acceptability to every entry and to the upper bound on `η`.
    pub fn is_acceptable(&self, eta: f64, phi: f64) -> bool {
        eta.is_finite()
            && phi.is_finite()
            && eta <= self.eta_max
            && self.entries.iter().all(|e| self.envelope_accepts(*e, eta, phi))
    }

    /// Inserts an entry and removes the entries it dominates. Entries above
    /// `eta_max` and entries dominated by the filter are not inserted.
    pub fn add(&mut self, eta: f64, phi: f64) {
        if !(eta.is_finite() && phi.is_finite()) || eta > self.eta_max {
            return;
        }
        if self.entries.iter().any(|&(e, p)| e <= eta && p <= phi) {
            return;
        }
        self.entries.retain(|&(e, p)| !(eta <= e && phi <= p));
        if self.entries.len() >= self.capacity {
            let worst = (0..self.entries.len())
                .max_by(|&a, &b| self.entries[a].0.total_cmp(&self.entries[b].0))
                .unwrap();
            self.entries.remove(worst);
        }
        let pos = self.entries.partition_point(|e| e.0 > eta);
        self.entries.insert(pos, (eta, phi));
    }

    /// Clears the entries and sets a new upper bound on `η`.
    pub fn reset(&mut self, eta_max: f64) {
        self.entries.clear();
        self.eta_max = eta_max;
    }
}

/// The two filter line/trust-region acceptance rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterVariant {
    /// Trust-region filter with f-type and h-type iterations.
    Leyffer,
    /// Line-search filter with a small-infeasibility gate `η ≤ θ_min`.
    Waechter { theta_min: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterDecision {
    pub accepted: bool,
    pub add_current_to_filter: bool,
}

/// Constants of the sufficient-decrease and switching conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterConstants {
    pub sigma: f64,
    pub delta: f64,
}

/// Filter acceptance of `trial` from `current` (both `(η, φ)`), where
/// `predicted` is `Δm_φ(αd)`.
pub fn filter_is_acceptable(
    filter: &Filter,
    variant: FilterVariant,
    current: (f64, f64),
    trial: (f64, f64),
    predicted: f64,
    constants: FilterConstants,
) -> FilterDecision {
    let (eta_k, phi_k) = current;
    let (eta, phi) = trial;
    let reject = FilterDecision {
        accepted: false,
        add_current_to_filter: false,
    };
    if !filter.is_acceptable(eta, phi) {
        return reject;
    }
    let improves = filter.envelope_accepts(current, eta, phi);
    let armijo = sufficient_decrease(phi_k - phi, predicted, constants.sigma, phi_k);
    match variant {
        FilterVariant::Leyffer => {
            if !improves {
                return reject;
            }
            if predicted >= constants.delta * eta_k * eta_k {
                FilterDecision {
                    accepted: armijo,
                    add_current_to_filter: armijo && eta_k > 0.0,
                }
            } else {
                FilterDecision {
                    accepted: true,
                    add_current_to_filter: true,
                }
            }
        }
        FilterVariant::Waechter { theta_min } => {
            let switching = predicted > 0.0 && predicted >= constants.delta * eta_k * eta_k;
            let mut decision = reject;
            if eta_k <= theta_min && switching {
                if armijo {
                    decision.accepted = true;
                } else {
                    decision.add_current_to_filter = true;
                }
            } else if improves {
                decision.accepted = true;
            }
            if !switching {
                decision.add_current_to_filter = true;
            }
            decision
        }
    }
}
