//! Primal-dual interior-point iterations and the elastic restoration phase.

use super::{axpy, trial_functions, Diagnostics, InfeasibilityResiduals, Point, Solver, Status, StepSummary,
    StrategyKind, BarrierCheck, SolverConfig};
use crate::globalization::{
    barrier_term, filter_is_acceptable, merit_is_acceptable, BarrierContext, Filter, FilterVariant, ModelKind,
    ProgressMeasures, ReductionModel,
};
use crate::linalg::{norm_1, norm_inf, Matrix};
use crate::mechanism::{line_search, MechanismError};
use crate::model::Model;
use crate::reformulation::make_l1_relaxed;
use crate::subproblem::{ipm_solve_step, update_barrier_parameter, BarrierState, InteriorPoint};
use std::sync::Arc;

pub(super) enum IpmFailure {
    StepTooSmall,
    Terminal(Status),
}

/// A barrier problem and its iterate.
struct BarrierProblem<'a> {
    model: &'a dyn Model,
    lower: &'a [f64],
    upper: &'a [f64],
    pt: &'a mut Point,
    barrier: &'a mut BarrierState,
    filter: &'a mut Filter,
    theta_min: f64,
    /// Tolerance whose tenth is the smallest barrier parameter.
    mu_epsilon: f64,
    /// Diagonal added to the Hessian scaled by `sqrt(μ)`.
    proximal: Option<&'a [f64]>,
}

/// Error of the barrier problem at the current iterate.
fn barrier_error(prob: &BarrierProblem, cfg: &SolverConfig, mu: f64) -> f64 {
    let p = &*prob.pt;
    let jty = p.jac.tr_mul_vec(&p.y);
    let lag: Vec<f64> = (0..p.x.len())
        .map(|i| p.grad[i] - jty[i] - p.zl[i] + p.zu[i])
        .collect();
    let n = p.x.len();
    let m = p.c.len();
    let total = norm_1(&p.y) + norm_1(&p.zl) + norm_1(&p.zu);
    let sd = (total / (cfg.residual_scaling_cap * (n + m).max(1) as f64)).max(1.0);
    let mut comp: f64 = 0.0;
    for i in 0..n {
        if prob.lower[i].is_finite() {
            comp = comp.max((p.zl[i] * (p.x[i] - prob.lower[i]) - mu).abs());
        }
        if prob.upper[i].is_finite() {
            comp = comp.max((p.zu[i] * (prob.upper[i] - p.x[i]) - mu).abs());
        }
    }
    (norm_inf(&lag) / sd).max(norm_inf(&p.c)).max(comp / sd)
}

/// `x + αdx`, with `α` shrunk until the primal fraction-to-boundary
/// inequalities hold for the computed point.
fn interior_trial(x: &[f64], dx: &[f64], alpha: f64, lower: &[f64], upper: &[f64], tau: f64) -> Option<Vec<f64>> {
    let mut a = alpha;
    for _ in 0..64 {
        let t = axpy(x, a, dx);
        if primal_fraction_to_boundary(x, &t, lower, upper, tau) {
            return Some(t);
        }
        a *= 1.0 - 1e-12;
    }
    None
}

fn primal_fraction_to_boundary(x: &[f64], t: &[f64], lower: &[f64], upper: &[f64], tau: f64) -> bool {
    (0..x.len()).all(|i| {
        (!lower[i].is_finite() || t[i] - lower[i] >= (1.0 - tau) * (x[i] - lower[i]))
            && (!upper[i].is_finite() || upper[i] - t[i] >= (1.0 - tau) * (upper[i] - x[i]))
    })
}

fn strictly_interior(p: &Point, lower: &[f64], upper: &[f64]) -> bool {
    (0..p.x.len()).all(|i| {
        (!lower[i].is_finite() || (p.x[i] > lower[i] && p.zl[i] > 0.0))
            && (!upper[i].is_finite() || (p.x[i] < upper[i] && p.zu[i] > 0.0))
    })
}

/// One line-search iteration on a barrier problem.
fn barrier_iteration(
    prob: &mut BarrierProblem,
    cfg: &SolverConfig,
    iteration: usize,
    diag: &mut Diagnostics,
    solves: &mut usize,
) -> Result<StepSummary, IpmFailure> {
    loop {
        let err = barrier_error(prob, cfg, prob.barrier.mu);
        let next = update_barrier_parameter(*prob.barrier, err, prob.mu_epsilon, &cfg.barrier);
        if next.mu == prob.barrier.mu {
            break;
        }
        *prob.barrier = next;
        let eta_max = prob.filter.eta_max();
        prob.filter.reset(eta_max);
    }
    let (lower, upper) = (prob.lower, prob.upper);
    let mut h = prob.model.lagrangian_hessian(&prob.pt.x, 1.0, &prob.pt.y);
    if let Some(w) = prob.proximal {
        let zeta = prob.barrier.mu.sqrt();
        for (i, w) in w.iter().enumerate() {
            h[(i, i)] += zeta * w;
        }
    }
    if !h.is_finite() {
        return Err(IpmFailure::Terminal(Status::EvaluationError));
    }
    let p = &*prob.pt;
    let point = InteriorPoint {
        x: &p.x,
        y: &p.y,
        z_lower: &p.zl,
        z_upper: &p.zu,
        lower,
        upper,
    };
    let eval = p.evaluations(None);
    let dir = ipm_solve_step(&eval, &h, &point, prob.barrier, &cfg.regularization)
        .map_err(|_| IpmFailure::Terminal(Status::StepFailure))?;
    *solves += 1;
    let mu = prob.barrier.mu;
    let tau = prob.barrier.tau;

    let mut complementarity_residual: f64 = 0.0;
    for i in 0..p.x.len() {
        let dx = dir.dx[i];
        if lower[i].is_finite() {
            let s = p.x[i] - lower[i];
            let dz = dir.dz_lower[i] / dir.alpha_z;
            let r = p.zl[i] * dx + s * dz - (mu - s * p.zl[i]);
            complementarity_residual = complementarity_residual.max(r.abs() / (mu + (s * p.zl[i]).abs()).max(1.0));
        }
        if upper[i].is_finite() {
            let s = upper[i] - p.x[i];
            let dz = dir.dz_upper[i] / dir.alpha_z;
            let r = -p.zu[i] * dx + s * dz - (mu - s * p.zu[i]);
            complementarity_residual = complementarity_residual.max(r.abs() / (mu + (s * p.zu[i]).abs()).max(1.0));
        }
    }

    let ctx = BarrierContext { mu, lower, upper };
    let f_k = p.f.expect("objective is evaluated at interior-point iterates");
    let current = ProgressMeasures {
        eta: p.eta(),
        omega: f_k,
        xi: barrier_term(&p.x, &ctx),
    };
    let model = ReductionModel::new(ModelKind::Linear, 1.0, &p.grad, &p.c, &p.jac, None, &dir.dx)
        .with_barrier(&point.barrier_gradient(mu), &point.sigma(), &dir.dx);
    let tiny = (0..p.x.len()).all(|i| dir.dx[i].abs() <= 10.0 * f64::EPSILON * (1.0 + p.x[i].abs()));
    let variant = match cfg.strategy {
        StrategyKind::WaechterFilter => Some(FilterVariant::Waechter {
            theta_min: prob.theta_min,
        }),
        StrategyKind::LeyfferFilter => Some(FilterVariant::Leyffer),
        StrategyKind::L1Merit => None,
    };
    let x_k = p.x.clone();
    let filter = &mut *prob.filter;
    let model_ref = prob.model;
    let out = line_search(&cfg.line_search, dir.alpha_max, |alpha| {
        let Some(x) = interior_trial(&x_k, &dir.dx, alpha, lower, upper, tau) else {
            return Ok::<_, ()>(None);
        };
        let Some((f, c)) = trial_functions(model_ref, &x, true) else {
            return Ok(None);
        };
        let trial = ProgressMeasures {
            eta: norm_1(&c),
            omega: f.unwrap(),
            xi: barrier_term(&x, &ctx),
        };
        if !trial.is_finite() {
            return Ok(None);
        }
        let accepted = tiny || {
            let pred = model.at(alpha);
            match variant {
                None => merit_is_acceptable(&current, &trial, &pred, alpha * norm_inf(&dir.dx), cfg.merit_sigma),
                Some(v) => {
                    let cur = (current.eta, current.filter_objective());
                    let tri = (trial.eta, trial.filter_objective());
                    let d = filter_is_acceptable(filter, v, cur, tri, pred.filter_objective(), cfg.filter);
                    if d.add_current_to_filter {
                        filter.add(cur.0, cur.1);
                    }
                    debug_assert!(!d.accepted || filter.is_acceptable(tri.0, tri.1));
                    d.accepted
                }
            }
        };
        Ok(accepted.then_some((x, f, c)))
    });
    let o = match out {
        Ok(o) => o,
        Err(MechanismError::Callback(())) => unreachable!(),
        Err(_) => return Err(IpmFailure::StepTooSmall),
    };
    let (x, f, c) = o.trial;
    let p = &mut *prob.pt;
    let zl = axpy(&p.zl, 1.0, &dir.dz_lower);
    let zu = axpy(&p.zu, 1.0, &dir.dz_upper);
    let dual_ftb = (0..x.len()).all(|i| {
        (!lower[i].is_finite() || zl[i] >= (1.0 - tau) * p.zl[i])
            && (!upper[i].is_finite() || zu[i] >= (1.0 - tau) * p.zu[i])
    });
    let primal_ftb = primal_fraction_to_boundary(&p.x, &x, lower, upper, tau);
    p.x = x;
    p.y = axpy(&p.y, o.alpha, &dir.dy);
    p.zl = zl;
    p.zu = zu;
    p.f = f;
    p.c = c;
    if !p.update_derivatives(prob.model) {
        return Err(IpmFailure::Terminal(Status::EvaluationError));
    }
    diag.barrier_checks.push(BarrierCheck {
        iteration,
        strictly_interior: strictly_interior(p, lower, upper),
        fraction_to_boundary: primal_ftb && dual_ftb,
        complementarity_residual,
    });
    Ok(StepSummary {
        alpha: o.alpha,
        step_norm: o.alpha * norm_inf(&dir.dx),
        radius: None,
    })
}

/// Interior-point iterate of the elastic feasibility problem
/// `min Σ(p + n) s.t. c(x) - p + n = 0` over `(x, p, n)`.
pub(crate) struct Restoration {
    model: Arc<dyn Model>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    pub pt: Point,
    pub barrier: BarrierState,
    pub filter: Filter,
    theta_min: f64,
    entry_eta: f64,
    /// `min(1, 1/|x_i|)²` at the entry point, zero on the elastics.
    proximal: Vec<f64>,
    n: usize,
    m: usize,
}

impl Restoration {
    /// Constraint values `c(x) = (c(x) - p + n) + p - n` of the base model.
    pub fn base_c(&self) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        (0..m)
            .map(|j| self.pt.c[j] + self.pt.x[n + j] - self.pt.x[n + m + j])
            .collect()
    }

    pub fn infeasibility_residuals(&self, s: &Solver) -> InfeasibilityResiduals {
        let n = self.n;
        let rows: Vec<usize> = (0..self.m).collect();
        let cols: Vec<usize> = (0..n).collect();
        let jac = self.pt.jac.select(&rows, &cols);
        s.infeasibility_residuals(
            &self.pt.x[..n],
            &self.base_c(),
            &jac,
            &self.pt.y,
            &self.pt.zl[..n],
            &self.pt.zu[..n],
        )
    }

    /// Drops the elastics and hands the point back to the solver with the
    /// feasibility multipliers.
    pub fn leave(self, s: &mut Solver) {
        let n = self.n;
        let c = self.base_c();
        s.pt.x = self.pt.x[..n].to_vec();
        s.pt.zl = self.pt.zl[..n].to_vec();
        s.pt.zu = self.pt.zu[..n].to_vec();
        s.pt.y = self.pt.y.clone();
        s.pt.c = c;
        s.pt.f = None;
        let rows: Vec<usize> = (0..self.m).collect();
        let cols: Vec<usize> = (0..n).collect();
        s.pt.jac = self.pt.jac.select(&rows, &cols);
        s.pt.grad = s.model.objective_gradient(&s.pt.x);
    }
}

/// Elastic values `n = (μ - c)/2 + sqrt(((μ - c)/2)² + μc/2)`, `p = c + n`.
pub(crate) fn elastic_start(c: &[f64], mu: f64) -> (Vec<f64>, Vec<f64>) {
    let n: Vec<f64> = c
        .iter()
        .map(|c| {
            let h = 0.5 * (mu - c);
            h + (h * h + 0.5 * mu * c).sqrt()
        })
        .collect();
    let p = c.iter().zip(&n).map(|(c, n)| c + n).collect();
    (p, n)
}

impl Solver {
    fn enter_ipm_restoration(&mut self) {
        let (n, m) = (self.n, self.m);
        let eta = self.pt.eta();
        let ctx = BarrierContext {
            mu: self.barrier.mu,
            lower: &self.lower,
            upper: &self.upper,
        };
        let phi = self.pt.objective(self.model.as_ref()) + barrier_term(&self.pt.x, &ctx);
        self.filter.add(eta, phi);
        self.phase.enter_restoration(eta);

        let model: Arc<dyn Model> = Arc::new(make_l1_relaxed(self.model.clone(), 0.0));
        let mu = self.barrier.mu.max(norm_inf(&self.pt.c));
        let (pos, neg) = elastic_start(&self.pt.c, mu);
        let mut x = self.pt.x.clone();
        x.extend(&pos);
        x.extend(&neg);
        let (lower, upper) = model.variable_bounds();
        let mut proximal: Vec<f64> = self.pt.x.iter().map(|x| (1.0 / x.abs()).min(1.0).powi(2)).collect();
        proximal.extend(std::iter::repeat_n(0.0, 2 * m));
        let mut zl = self.pt.zl.clone();
        zl.extend(pos.iter().map(|p| mu / p));
        zl.extend(neg.iter().map(|v| mu / v));
        let mut zu = self.pt.zu.clone();
        zu.extend(std::iter::repeat_n(0.0, 2 * m));
        let c: Vec<f64> = (0..m).map(|j| self.pt.c[j] - pos[j] + neg[j]).collect();
        let mut jac = Matrix::zeros(m, n + 2 * m);
        jac.set_block(0, 0, &self.pt.jac);
        for j in 0..m {
            jac[(j, n + j)] = -1.0;
            jac[(j, n + m + j)] = 1.0;
        }
        let mut grad = vec![0.0; n];
        grad.extend(std::iter::repeat_n(1.0, 2 * m));
        let pt = Point {
            f: Some(pos.iter().chain(&neg).sum()),
            x,
            y: vec![0.0; m],
            zl,
            zu,
            c,
            grad,
            jac,
        };
        let eta_r = pt.eta();
        let (theta_min, eta_max) = self.theta_bounds(eta_r);
        let filter = self.new_filter(eta_max);
        self.restoration = Some(Restoration {
            model,
            lower,
            upper,
            pt,
            barrier: BarrierState::new(mu, self.cfg.barrier.tau_min),
            filter,
            theta_min,
            entry_eta: eta,
            proximal,
            n,
            m,
        });
    }

    /// Returns to the optimality phase if the restoration iterate reduced the
    /// infeasibility enough and is acceptable to the filter.
    fn try_leave_restoration(&mut self, r: Restoration) -> Option<Restoration> {
        let c = r.base_c();
        let eta = norm_1(&c);
        if eta > self.cfg.restoration_kappa * r.entry_eta {
            return Some(r);
        }
        let x = &r.pt.x[..self.n];
        let f = self.model.objective(x);
        let ctx = BarrierContext {
            mu: self.barrier.mu,
            lower: &self.lower,
            upper: &self.upper,
        };
        let phi = f + barrier_term(x, &ctx);
        if !phi.is_finite() || !self.filter.is_acceptable(eta, phi) {
            return Some(r);
        }
        r.leave(self);
        self.pt.f = Some(f);
        self.phase.return_to_optimality();
        self.reset_multipliers();
        None
    }

    /// One outer iteration of the interior-point method.
    pub(super) fn ipm_iteration(&mut self) -> Result<StepSummary, Status> {
        let iteration = self.iteration;
        if let Some(mut r) = self.restoration.take() {
            let mut prob = BarrierProblem {
                model: r.model.as_ref(),
                lower: &r.lower,
                upper: &r.upper,
                pt: &mut r.pt,
                barrier: &mut r.barrier,
                filter: &mut r.filter,
                theta_min: r.theta_min,
                mu_epsilon: self.cfg.tolerance,
                proximal: Some(&r.proximal),
            };
            let out = barrier_iteration(&mut prob, &self.cfg, iteration, &mut self.diag, &mut self.subproblem_solves);
            return match out {
                Ok(step) => {
                    self.restoration = self.try_leave_restoration(r);
                    Ok(step)
                }
                Err(e) => {
                    self.restoration = Some(r);
                    Err(match e {
                        IpmFailure::StepTooSmall => Status::StepFailure,
                        IpmFailure::Terminal(s) => s,
                    })
                }
            };
        }
        let mut prob = BarrierProblem {
            model: self.model.as_ref(),
            lower: &self.lower,
            upper: &self.upper,
            pt: &mut self.pt,
            barrier: &mut self.barrier,
            filter: &mut self.filter,
            theta_min: self.theta_min,
            mu_epsilon: self.cfg.tolerance * self.scaling.s_f.min(1.0),
            proximal: None,
        };
        match barrier_iteration(&mut prob, &self.cfg, iteration, &mut self.diag, &mut self.subproblem_solves) {
            Ok(step) => Ok(step),
            Err(IpmFailure::Terminal(s)) => Err(s),
            Err(IpmFailure::StepTooSmall) => {
                if self.pt.eta() == 0.0 {
                    return Err(Status::StepFailure);
                }
                self.enter_ipm_restoration();
                Ok(StepSummary {
                    alpha: 0.0,
                    step_norm: 0.0,
                    radius: None,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elastic_start_is_centered() {
        let mu = 0.1;
        for c in [-3.0, -1e-3, 0.0, 2.5] {
            let (p, n) = elastic_start(&[c], mu);
            assert!(p[0] > 0.0 && n[0] > 0.0);
            assert!((c - p[0] + n[0]).abs() < 1e-14);
        }
    }
}
