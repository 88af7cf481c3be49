//! SQP and SLP iterations under feasibility restoration or ℓ1 relaxation.

use super::{axpy, step_in_bounds, trial_functions, MechanismKind, RelaxationKind, Solver, Status, StepSummary,
    StrategyKind, SubproblemKind};
use crate::globalization::{
    filter_is_acceptable, merit_is_acceptable, sufficient_decrease, FilterVariant, ModelKind, ProgressMeasures,
    ReductionModel,
};
use crate::linalg::{norm_1, qp_solve, Matrix, QpStatus};
use crate::mechanism::{line_search, trust_region, MechanismError, TrustRegionAttempt};
use crate::relaxation::{l1_compute_direction, PenaltySolve, Phase, SteeringContext};
use crate::subproblem::{
    build_elastic_qp, build_sqp_qp, linearization_is_consistent, qp_direction, regularize_hessian, Direction,
    Regularization,
};

/// Why no direction was produced at a given radius.
enum DirectionError {
    /// The subproblem failed numerically; a trust region retries with a smaller radius.
    Rejected,
    Fatal(Status),
}

struct SqpStep {
    dir: Direction,
    phase: Phase,
    /// Reductions of the measures the active phase is judged on.
    model: ReductionModel,
    /// Linear model of the objective, for the return to the optimality phase.
    objective_model: ReductionModel,
}

struct SqpTrial {
    x: Vec<f64>,
    y: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
    f: Option<f64>,
    c: Vec<f64>,
    return_to_optimality: bool,
}

/// Second derivatives and tests computed at most once per outer iteration.
#[derive(Default)]
struct Cache {
    optimality_hessian: Option<Matrix>,
    objective_hessian: Option<Matrix>,
    constraint_hessian: Option<Matrix>,
    consistent: Option<bool>,
}

fn measures(f: f64, eta: f64, rho: f64) -> ProgressMeasures {
    ProgressMeasures {
        eta,
        omega: if rho == 0.0 { 0.0 } else { rho * f },
        xi: 0.0,
    }
}

impl Solver {
    fn hessian(&self, rho: f64, y: &[f64]) -> Result<Matrix, DirectionError> {
        let h = self.model.lagrangian_hessian(&self.pt.x, rho, y);
        if h.is_finite() {
            Ok(h)
        } else {
            Err(DirectionError::Fatal(Status::EvaluationError))
        }
    }

    fn uses_hessian(&self) -> bool {
        self.cfg.subproblem == SubproblemKind::Qp
    }

    /// Switches to the restoration phase: records the current point in the
    /// filter and zeroes the constraint multipliers.
    fn enter_sqp_restoration(&mut self) {
        let eta = self.pt.eta();
        let f = self.pt.objective(self.model.as_ref());
        self.filter.add(eta, f);
        self.phase.enter_restoration(eta);
        self.pt.y = vec![0.0; self.m];
    }

    fn restoration_direction(&mut self, cache: &mut Cache, radius: Option<f64>) -> Result<SqpStep, DirectionError> {
        let w = if self.uses_hessian() {
            if cache.constraint_hessian.is_none() {
                cache.constraint_hessian = Some(self.hessian(0.0, &self.pt.y)?);
            }
            let h = cache.constraint_hessian.as_ref().unwrap();
            let (w, dw) = regularize_hessian(
                h,
                &self.pt.jac,
                Regularization::Primal,
                &self.cfg.regularization,
                self.last_delta_w,
            )
            .map_err(|_| DirectionError::Fatal(Status::StepFailure))?;
            self.last_delta_w = dw;
            Some(w)
        } else {
            None
        };
        let eval = self.pt.evaluations(None);
        let qp = build_elastic_qp(&eval, w.as_ref(), &self.pt.x, &self.lower, &self.upper, 0.0, radius);
        let sol = qp_solve(&qp, None).map_err(|_| DirectionError::Rejected)?;
        self.subproblem_solves += 1;
        if sol.status != QpStatus::Optimal {
            return Err(DirectionError::Rejected);
        }
        let p = &self.pt;
        let dir = qp_direction(&qp, &sol, &p.x, &self.lower, &self.upper, &p.y, &p.zl, &p.zu);
        let model = ReductionModel::new(ModelKind::Linear, 0.0, &p.grad, &p.c, &p.jac, None, &dir.dx);
        let objective_model = ReductionModel::new(ModelKind::Linear, 1.0, &p.grad, &p.c, &p.jac, None, &dir.dx);
        Ok(SqpStep {
            dir,
            phase: Phase::Restoration,
            model,
            objective_model,
        })
    }

    fn restoration_strategy_direction(
        &mut self,
        cache: &mut Cache,
        radius: Option<f64>,
    ) -> Result<SqpStep, DirectionError> {
        if self.phase.phase == Phase::Restoration {
            return self.restoration_direction(cache, radius);
        }
        let hessian = if self.uses_hessian() {
            if cache.optimality_hessian.is_none() {
                cache.optimality_hessian = Some(self.hessian(1.0, &self.pt.y)?);
            }
            cache.optimality_hessian.clone()
        } else {
            None
        };
        let eval = self.pt.evaluations(hessian);
        let (qp, dw) = build_sqp_qp(
            &eval,
            &self.pt.x,
            &self.lower,
            &self.upper,
            1.0,
            radius,
            self.cfg.hessian_regularization,
            &self.cfg.regularization,
            self.last_delta_w,
        )
        .map_err(|_| DirectionError::Fatal(Status::StepFailure))?;
        self.last_delta_w = dw;
        let sol = qp_solve(&qp, None).map_err(|_| DirectionError::Rejected)?;
        self.subproblem_solves += 1;
        match sol.status {
            QpStatus::Infeasible => {
                self.enter_sqp_restoration();
                cache.consistent = Some(false);
                self.restoration_direction(cache, radius)
            }
            QpStatus::Unbounded => Err(DirectionError::Rejected),
            QpStatus::Optimal => {
                let p = &self.pt;
                let dir = qp_direction(&qp, &sol, &p.x, &self.lower, &self.upper, &p.y, &p.zl, &p.zu);
                let kind = if self.cfg.strategy == StrategyKind::L1Merit {
                    ModelKind::Quadratic
                } else {
                    ModelKind::Linear
                };
                let w = (kind == ModelKind::Quadratic && self.uses_hessian()).then_some(&qp.w);
                let model = ReductionModel::new(kind, 1.0, &p.grad, &p.c, &p.jac, w, &dir.dx);
                let objective_model = model.clone();
                Ok(SqpStep {
                    dir,
                    phase: Phase::Optimality,
                    model,
                    objective_model,
                })
            }
        }
    }

    fn l1_direction(&mut self, cache: &mut Cache, radius: Option<f64>) -> Result<SqpStep, DirectionError> {
        if self.uses_hessian() {
            if cache.objective_hessian.is_none() {
                cache.objective_hessian = Some(self.hessian(1.0, &vec![0.0; self.m])?);
            }
            if cache.constraint_hessian.is_none() {
                cache.constraint_hessian = Some(self.hessian(0.0, &self.pt.y)?);
            }
        }
        let p = &self.pt;
        let eval = p.evaluations(None);
        let ctx = SteeringContext {
            c: &p.c,
            jac: &p.jac,
            y: &p.y,
            z_lower: &p.zl,
            z_upper: &p.zu,
        };
        let mut steering = self.steering;
        let mut solves = 0;
        let mut last_delta_w = self.last_delta_w;
        let mut hessians: Vec<(f64, Option<Matrix>)> = Vec::new();
        let (lower, upper, schedule) = (&self.lower, &self.upper, &self.cfg.regularization);
        let (hf, hc) = (cache.objective_hessian.as_ref(), cache.constraint_hessian.as_ref());
        let solve = |rho: f64| -> Result<PenaltySolve, DirectionError> {
            let w = match (hf, hc) {
                (Some(hf), Some(hc)) => {
                    let mut w = hc.clone();
                    w.axpy(rho, hf);
                    let (w, dw) = regularize_hessian(&w, &p.jac, Regularization::Primal, schedule, last_delta_w)
                        .map_err(|_| DirectionError::Fatal(Status::StepFailure))?;
                    last_delta_w = dw;
                    Some(w)
                }
                _ => None,
            };
            let qp = build_elastic_qp(&eval, w.as_ref(), &p.x, lower, upper, rho, radius);
            let sol = qp_solve(&qp, None).map_err(|_| DirectionError::Rejected)?;
            solves += 1;
            if sol.status != QpStatus::Optimal {
                return Err(DirectionError::Rejected);
            }
            let direction = qp_direction(&qp, &sol, &p.x, lower, upper, &p.y, &p.zl, &p.zu);
            let predicted_reduction =
                ReductionModel::new(ModelKind::Quadratic, rho, &p.grad, &p.c, &p.jac, w.as_ref(), &direction.dx)
                    .at(1.0)
                    .merit();
            hessians.push((rho, w));
            Ok(PenaltySolve {
                direction,
                predicted_reduction,
            })
        };
        let outcome = l1_compute_direction(&mut steering, &ctx, solve);
        self.subproblem_solves += solves;
        self.last_delta_w = last_delta_w;
        let outcome = outcome?;
        self.steering = steering;
        if let Some(check) = outcome.check {
            self.diag.steering_checks.push(check);
        }
        if outcome.rho != self.rho {
            self.rho = outcome.rho;
            if self.cfg.strategy != StrategyKind::L1Merit {
                let eta_max = self.filter.eta_max();
                self.filter.reset(eta_max);
            }
        }
        let w = hessians
            .iter()
            .rev()
            .find(|(r, _)| *r == outcome.rho)
            .and_then(|(_, w)| w.clone());
        let p = &self.pt;
        let dir = outcome.solve.direction;
        let model = ReductionModel::new(ModelKind::Quadratic, self.rho, &p.grad, &p.c, &p.jac, w.as_ref(), &dir.dx);
        let objective_model = model.clone();
        Ok(SqpStep {
            dir,
            phase: Phase::Optimality,
            model,
            objective_model,
        })
    }

    fn sqp_direction(&mut self, cache: &mut Cache, radius: Option<f64>) -> Result<SqpStep, DirectionError> {
        match self.cfg.relaxation {
            RelaxationKind::FeasibilityRestoration => self.restoration_strategy_direction(cache, radius),
            RelaxationKind::L1Relaxation => self.l1_direction(cache, radius),
        }
    }

    /// Filter acceptance; records the current point in the filter when the
    /// rule says so, whether or not the trial is accepted.
    fn filter_accepts(&mut self, current: (f64, f64), trial: (f64, f64), predicted: f64) -> bool {
        let variant = match self.cfg.strategy {
            StrategyKind::WaechterFilter => FilterVariant::Waechter {
                theta_min: self.theta_min,
            },
            _ => FilterVariant::Leyffer,
        };
        let decision = filter_is_acceptable(&self.filter, variant, current, trial, predicted, self.cfg.filter);
        if decision.add_current_to_filter {
            self.filter.add(current.0, current.1);
        }
        debug_assert!(!decision.accepted || self.filter.is_acceptable(trial.0, trial.1));
        decision.accepted
    }

    /// Acceptance in the optimality measures with objective multiplier `rho`.
    fn optimality_accepts(
        &mut self,
        current: (f64, f64),
        trial: (f64, f64),
        model: &ReductionModel,
        alpha: f64,
        step_norm: f64,
        rho: f64,
    ) -> bool {
        let pred = model.at(alpha);
        if self.cfg.strategy == StrategyKind::L1Merit {
            
            merit_is_acceptable(
                &measures(current.1, current.0, rho),
                &measures(trial.1, trial.0, rho),
                &pred,
                step_norm,
                self.cfg.merit_sigma,
            )
        } else {
            let scale = |f: f64| if rho == 0.0 { 0.0 } else { rho * f };
            self.filter_accepts((current.0, scale(current.1)), (trial.0, scale(trial.1)), pred.filter_objective())
        }
    }

    fn sqp_test(&mut self, cache: &mut Cache, step: &SqpStep, alpha: f64) -> Result<Option<SqpTrial>, Status> {
        let p = &self.pt;
        let d = &step.dir;
        let x = step_in_bounds(&p.x, alpha, &d.dx, &self.lower, &self.upper);
        let y = axpy(&p.y, alpha, &d.dy);
        let zl = axpy(&p.zl, 1.0, &d.dz_lower);
        let zu = axpy(&p.zu, 1.0, &d.dz_upper);
        let step_norm = alpha * d.primal_norm_inf();
        if step_norm == 0.0 {
            return Ok(Some(SqpTrial {
                x,
                y,
                zl,
                zu,
                f: p.f,
                c: p.c.clone(),
                return_to_optimality: false,
            }));
        }
        let eta_k = p.eta();
        let model = self.model.clone();
        match step.phase {
            Phase::Optimality => {
                let Some((f, c)) = trial_functions(model.as_ref(), &x, true) else {
                    return Ok(None);
                };
                let f = f.unwrap();
                let f_k = self.pt.objective(model.as_ref());
                let accepted = self.optimality_accepts((eta_k, f_k), (norm_1(&c), f), &step.model, alpha, step_norm, self.rho);
                Ok(accepted.then_some(SqpTrial {
                    x,
                    y,
                    zl,
                    zu,
                    f: Some(f),
                    c,
                    return_to_optimality: false,
                }))
            }
            Phase::Restoration => {
                let Some((_, c)) = trial_functions(model.as_ref(), &x, false) else {
                    return Ok(None);
                };
                let eta = norm_1(&c);
                let sigma = if self.cfg.strategy == StrategyKind::L1Merit {
                    self.cfg.merit_sigma
                } else {
                    self.cfg.filter.sigma
                };
                if !sufficient_decrease(eta_k - eta, step.model.at(alpha).d_eta, sigma, eta_k) {
                    return Ok(None);
                }
                let mut trial = SqpTrial {
                    x,
                    y,
                    zl,
                    zu,
                    f: None,
                    c,
                    return_to_optimality: false,
                };
                if eta < self.filter.eta_min() && self.is_consistent(cache) {
                    let f = model.objective(&trial.x);
                    if f.is_finite() {
                        let f_k = self.pt.objective(model.as_ref());
                        self.filter.add(eta_k, f_k);
                        trial.f = Some(f);
                        trial.return_to_optimality =
                            self.optimality_accepts((eta_k, f_k), (eta, f), &step.objective_model, alpha, step_norm, 1.0);
                    }
                }
                Ok(Some(trial))
            }
        }
    }

    /// Whether the linearized constraints are consistent at the current point.
    fn is_consistent(&mut self, cache: &mut Cache) -> bool {
        if cache.consistent.is_none() {
            let eval = self.pt.evaluations(None);
            let consistent = linearization_is_consistent(&eval, &self.pt.x, &self.lower, &self.upper, None).unwrap_or(false);
            self.subproblem_solves += 1;
            cache.consistent = Some(consistent);
        }
        cache.consistent.unwrap()
    }

    fn commit_sqp(&mut self, t: SqpTrial) -> Result<(), Status> {
        self.pt.x = t.x;
        self.pt.y = t.y;
        self.pt.zl = t.zl;
        self.pt.zu = t.zu;
        self.pt.f = t.f;
        self.pt.c = t.c;
        if !self.pt.update_derivatives(self.model.as_ref()) {
            return Err(Status::EvaluationError);
        }
        if t.return_to_optimality {
            self.phase.return_to_optimality();
            self.reset_multipliers();
        }
        Ok(())
    }

    /// One outer iteration of an SQP/SLP method.
    pub(super) fn sqp_iteration(&mut self) -> Result<StepSummary, Status> {
        let mut cache = Cache::default();
        match self.cfg.mechanism {
            MechanismKind::LineSearch => {
                let step = match self.sqp_direction(&mut cache, None) {
                    Ok(s) => s,
                    Err(DirectionError::Rejected) => return Err(Status::StepFailure),
                    Err(DirectionError::Fatal(s)) => return Err(s),
                };
                let ls = self.cfg.line_search;
                let out = line_search(&ls, step.dir.alpha_max, |a| self.sqp_test(&mut cache, &step, a));
                match out {
                    Ok(o) => {
                        let step_norm = o.alpha * step.dir.primal_norm_inf();
                        self.commit_sqp(o.trial)?;
                        Ok(StepSummary {
                            alpha: o.alpha,
                            step_norm,
                            radius: None,
                        })
                    }
                    Err(MechanismError::Callback(s)) => Err(s),
                    Err(_) => {
                        if self.cfg.relaxation == RelaxationKind::FeasibilityRestoration
                            && self.phase.phase == Phase::Optimality
                        {
                            self.enter_sqp_restoration();
                            Ok(StepSummary {
                                alpha: 0.0,
                                step_norm: 0.0,
                                radius: None,
                            })
                        } else {
                            Err(Status::StepFailure)
                        }
                    }
                }
            }
            MechanismKind::TrustRegion => {
                let mut tr = self.tr;
                let out = trust_region(&mut tr, |radius| match self.sqp_direction(&mut cache, Some(radius)) {
                    Ok(step) => {
                        let step_norm = step.dir.primal_norm_inf();
                        let accepted = self.sqp_test(&mut cache, &step, 1.0)?.map(|t| (t, step_norm));
                        Ok(TrustRegionAttempt { accepted, step_norm })
                    }
                    Err(DirectionError::Rejected) => Ok(TrustRegionAttempt {
                        accepted: None,
                        step_norm: f64::INFINITY,
                    }),
                    Err(DirectionError::Fatal(s)) => Err(s),
                });
                self.tr = tr;
                match out {
                    Ok(o) => {
                        let (trial, step_norm) = o.trial;
                        self.commit_sqp(trial)?;
                        Ok(StepSummary {
                            alpha: 1.0,
                            step_norm,
                            radius: Some(o.radius),
                        })
                    }
                    Err(MechanismError::Callback(s)) => Err(s),
                    Err(MechanismError::TinyRadius) => Err(Status::SmallTrustRegion),
                    Err(_) => Err(Status::StepFailure),
                }
            }
        }
    }
}
