//! Inertia correction of saddle-point matrices by primal and dual regularization.

use super::ldlt::{ldlt_factorize, Factorization, Inertia};
use super::matrix::Matrix;
use super::LinalgError;

/// Trial sequence for the primal regularization `δ_w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizationSchedule {
    /// First nonzero trial when no previous value is known.
    pub initial: f64,
    /// Smallest nonzero trial.
    pub minimum: f64,
    /// Factor applied to the last successful value for the first nonzero trial.
    pub decrease: f64,
    pub increase: f64,
    pub maximum: f64,
}

impl Default for RegularizationSchedule {
    fn default() -> Self {
        Self {
            initial: 1e-4,
            minimum: 1e-20,
            decrease: 1.0 / 3.0,
            increase: 8.0,
            maximum: 1e40,
        }
    }
}

/// Result of [`inertia_correct`].
#[derive(Clone, Debug)]
pub struct CorrectedFactorization {
    pub factorization: Factorization,
    pub delta_w: f64,
    pub delta_c: f64,
    /// Number of factorizations performed.
    pub attempts: usize,
}

/// Assembles `[[H + δ_w I, Aᵀ], [A, -δ_c I]]`.
pub fn assemble_kkt(h: &Matrix, a: &Matrix, delta_w: f64, delta_c: f64) -> Matrix {
    let n = h.rows();
    let m = a.rows();
    assert!(a.cols() == n || m == 0);
    let mut k = Matrix::zeros(n + m, n + m);
    k.set_block(0, 0, h);
    for i in 0..n {
        k[(i, i)] += delta_w;
    }
    for r in 0..m {
        for c in 0..n {
            k[(n + r, c)] = a[(r, c)];
            k[(c, n + r)] = a[(r, c)];
        }
        k[(n + r, n + r)] = -delta_c;
    }
    k
}

/// Finds the first regularization on the schedule for which the saddle-point
/// matrix has inertia `(n, m, 0)`.
///
/// `last_delta_w` is the value that succeeded on the previous call (0 if none);
/// `delta_c_value` is used only when the unregularized matrix is singular.
pub fn inertia_correct(
    h: &Matrix,
    a: &Matrix,
    schedule: &RegularizationSchedule,
    last_delta_w: f64,
    delta_c_value: f64,
) -> Result<CorrectedFactorization, LinalgError> {
    let n = h.rows();
    let m = a.rows();
    let target = Inertia::new(n, m, 0);
    let mut attempts = 0;
    let mut factor = |dw: f64, dc: f64| {
        attempts += 1;
        ldlt_factorize(&assemble_kkt(h, a, dw, dc))
    };

    let f = factor(0.0, 0.0);
    if f.inertia() == target {
        return Ok(CorrectedFactorization {
            factorization: f,
            delta_w: 0.0,
            delta_c: 0.0,
            attempts,
        });
    }
    let mut delta_c = 0.0;
    if f.inertia().zero > 0 && m > 0 {
        delta_c = delta_c_value;
        let f = factor(0.0, delta_c);
        if f.inertia() == target {
            return Ok(CorrectedFactorization {
                factorization: f,
                delta_w: 0.0,
                delta_c,
                attempts,
            });
        }
    }
    let mut delta_w = if last_delta_w > 0.0 {
        (last_delta_w * schedule.decrease).max(schedule.minimum)
    } else {
        schedule.initial
    };
    while delta_w <= schedule.maximum {
        let f = factor(delta_w, delta_c);
        if f.inertia() == target {
            return Ok(CorrectedFactorization {
                factorization: f,
                delta_w,
                delta_c,
                attempts,
            });
        }
        delta_w *= schedule.increase;
    }
    Err(LinalgError::RegularizationFailed)
}

/// Smallest scheduled `δ_w` making `H + δ_w I` positive definite.
pub fn convexify(
    h: &Matrix,
    schedule: &RegularizationSchedule,
    last_delta_w: f64,
) -> Result<f64, LinalgError> {
    let empty = Matrix::zeros(0, h.rows());
    inertia_correct(h, &empty, schedule, last_delta_w, 0.0).map(|c| c.delta_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_correct() {
        let c = inertia_correct(
            &Matrix::identity(2),
            &Matrix::from_rows(&[vec![1.0, 0.0]]),
            &RegularizationSchedule::default(),
            0.0,
            1e-8,
        )
        .unwrap();
        assert_eq!(c.delta_w, 0.0);
        assert_eq!(c.factorization.inertia(), Inertia::new(2, 1, 0));
    }

    #[test]
    fn rank_deficient_jacobian_needs_dual_regularization() {
        let c = inertia_correct(
            &Matrix::identity(2),
            &Matrix::zeros(1, 2),
            &RegularizationSchedule::default(),
            0.0,
            1e-8,
        )
        .unwrap();
        assert!(c.delta_c > 0.0);
        assert_eq!(c.factorization.inertia().zero, 0);
    }

    #[test]
    fn negative_curvature_on_null_space() {
        // Constraint fixes d2, leaving the negative curvature of d1 free.
        let h = Matrix::from_diagonal(&[-1.0, 1.0]);
        let a = Matrix::from_rows(&[vec![0.0, 1.0]]);
        let c = inertia_correct(&h, &a, &RegularizationSchedule::default(), 0.0, 1e-8).unwrap();
        assert!(c.delta_w > 1.0);
        assert!((c.delta_w - 1e-4 * 8f64.powi(5)).abs() < 1e-12);
    }

    #[test]
    fn schedule_exhaustion() {
        let sched = RegularizationSchedule {
            maximum: 1e-3,
            ..Default::default()
        };
        let r = convexify(&Matrix::from_diagonal(&[-1.0]), &sched, 0.0);
        assert_eq!(r.unwrap_err(), LinalgError::RegularizationFailed);
    }
}
