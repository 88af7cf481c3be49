//! Globalization mechanisms: backtracking line search and trust region.

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MechanismError<E> {
    #[error("step length fell below its minimum")]
    StepTooSmall,
    #[error("inner iteration limit reached")]
    InnerIterationLimit,
    #[error("trust-region radius became negligible")]
    TinyRadius,
    #[error("{0}")]
    Callback(E),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchConfig {
    pub backtrack_factor: f64,
    pub alpha_min: f64,
    pub max_inner: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            backtrack_factor: 0.5,
            alpha_min: 1e-7,
            max_inner: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LineSearchOutcome<T> {
    pub trial: T,
    pub alpha: f64,
    pub trials: usize,
}

/// Backtracks from `alpha_max` by `backtrack_factor` until `accept(α)`
/// returns a trial. Non-finite trials are the callback's to reject.
pub fn line_search<T, E>(
    cfg: &LineSearchConfig,
    alpha_max: f64,
    mut accept: impl FnMut(f64) -> Result<Option<T>, E>,
) -> Result<LineSearchOutcome<T>, MechanismError<E>> {
    assert!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0);
    let mut alpha = alpha_max;
    let mut trials = 0;
    loop {
        if trials >= cfg.max_inner {
            return Err(MechanismError::InnerIterationLimit);
        }
        if alpha < cfg.alpha_min {
            return Err(MechanismError::StepTooSmall);
        }
        trials += 1;
        if let Some(trial) = accept(alpha).map_err(MechanismError::Callback)? {
            return Ok(LineSearchOutcome { trial, alpha, trials });
        }
        alpha *= cfg.backtrack_factor;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrustRegionConfig {
    pub radius: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub increase_factor: f64,
    pub decrease_factor: f64,
    /// Relative tolerance for declaring the trust region active.
    pub activity_tolerance: f64,
    pub max_inner: usize,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        Self {
            radius: 10.0,
            radius_min: 1e-16,
            radius_max: 1e30,
            increase_factor: 2.0,
            decrease_factor: 0.5,
            activity_tolerance: 1e-10,
            max_inner: 100,
        }
    }
}

impl TrustRegionConfig {
    /// Whether a step of infinity norm `step_norm` touches the radius.
    pub fn is_active(&self, radius: f64, step_norm: f64) -> bool {
        step_norm >= radius - self.activity_tolerance * radius
    }
}

/// Result of one solve-and-test at a given radius.
#[derive(Clone, Debug)]
pub struct TrustRegionAttempt<T> {
    pub accepted: Option<T>,
    /// `‖dx‖_∞` of the direction (non-finite when the solve failed).
    pub step_norm: f64,
}

#[derive(Clone, Debug)]
pub struct TrustRegionOutcome<T> {
    pub trial: T,
    /// Radius at which the trial was accepted.
    pub radius: f64,
    pub attempts: usize,
}

/// Solves at the current radius until a trial is accepted, shrinking the
/// radius below `min(Δ, ‖dx‖_∞)` on rejection and enlarging it after an
/// accepted step that touched it. The radius carried in `cfg` is clamped
/// into `[radius_min, radius_max]` on entry.
pub fn trust_region<T, E>(
    cfg: &mut TrustRegionConfig,
    mut attempt: impl FnMut(f64) -> Result<TrustRegionAttempt<T>, E>,
) -> Result<TrustRegionOutcome<T>, MechanismError<E>> {
    cfg.radius = cfg.radius.clamp(cfg.radius_min, cfg.radius_max);
    let mut attempts = 0;
    loop {
        if cfg.radius < cfg.radius_min {
            return Err(MechanismError::TinyRadius);
        }
        if attempts >= cfg.max_inner {
            return Err(MechanismError::InnerIterationLimit);
        }
        attempts += 1;
        let radius = cfg.radius;
        let a = attempt(radius).map_err(MechanismError::Callback)?;
        match a.accepted {
            Some(trial) => {
                if cfg.is_active(radius, a.step_norm) {
                    cfg.radius = (cfg.increase_factor * radius).min(cfg.radius_max);
                }
                return Ok(TrustRegionOutcome { trial, radius, attempts });
            }
            None => {
                let shrink_from = if a.step_norm.is_finite() { radius.min(a.step_norm) } else { radius };
                cfg.radius = cfg.decrease_factor * shrink_from;
            }
        }
    }
}

/// Zeroes the bound multipliers of components whose step hits the trust
/// region rather than a variable bound.
#[allow(clippy::too_many_arguments)]
pub fn reset_trust_region_multipliers(
    cfg: &TrustRegionConfig,
    radius: f64,
    x_trial: &[f64],
    dx: &[f64],
    lower: &[f64],
    upper: &[f64],
    z_lower: &mut [f64],
    z_upper: &mut [f64],
) {
    for i in 0..dx.len() {
        let on_bound = x_trial[i] == lower[i] || x_trial[i] == upper[i];
        if cfg.is_active(radius, dx[i].abs()) && !on_bound {
            z_lower[i] = 0.0;
            z_upper[i] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_search_examples() {
        let cfg = LineSearchConfig::default();
        let out = line_search::<_, ()>(&cfg, 1.0, |a| Ok(Some(a))).unwrap();
        assert_eq!((out.alpha, out.trials), (1.0, 1));

        let mut l = 0;
        let out = line_search::<_, ()>(&cfg, 1.0, |a| {
            l += 1;
            Ok((l == 3).then_some(a))
        })
        .unwrap();
        assert_eq!(out.alpha, 0.25);

        let mut count = 0;
        let err = line_search::<(), ()>(&cfg, 1.0, |_| {
            count += 1;
            Ok(None)
        })
        .unwrap_err();
        assert_eq!(err, MechanismError::StepTooSmall);
        assert_eq!(count, 24);
    }

    #[test]
    fn radius_updates() {
        let mut cfg = TrustRegionConfig {
            radius: 1.0,
            ..Default::default()
        };
        trust_region::<_, ()>(&mut cfg, |_| Ok(TrustRegionAttempt { accepted: Some(()), step_norm: 0.3 })).unwrap();
        assert_eq!(cfg.radius, 1.0);
        trust_region::<_, ()>(&mut cfg, |r| Ok(TrustRegionAttempt { accepted: Some(()), step_norm: r })).unwrap();
        assert_eq!(cfg.radius, 2.0);

        let mut cfg = TrustRegionConfig {
            radius: 1.0,
            ..Default::default()
        };
        let mut seen = Vec::new();
        trust_region::<_, ()>(&mut cfg, |r| {
            seen.push(r);
            Ok(TrustRegionAttempt {
                accepted: (seen.len() == 2).then_some(()),
                step_norm: 0.3f64.min(r),
            })
        })
        .unwrap();
        assert_eq!(seen, vec![1.0, 0.15]);
    }

    #[test]
    fn tiny_radius() {
        let mut cfg = TrustRegionConfig::default();
        let err = trust_region::<(), ()>(&mut cfg, |r| Ok(TrustRegionAttempt { accepted: None, step_norm: r })).unwrap_err();
        assert_eq!(err, MechanismError::TinyRadius);
        assert!(cfg.radius < cfg.radius_min);
    }
}
