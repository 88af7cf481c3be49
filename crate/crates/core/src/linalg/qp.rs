//! Primal active-set solver for bound- and equality-constrained QPs.
//!
//! Solves `min ½dᵀWd + gᵀd  s.t.  A d = b,  lower ≤ d ≤ upper`.
//! `W` may be indefinite, in which case a first-order stationary point is
//! returned. A feasible starting point is found by an elastic phase I
//! (`min eᵀ(u⁺ + u⁻)  s.t.  A d - u⁺ + u⁻ = b`), which doubles as the
//! infeasibility certificate.

use super::eigen::symmetric_eigen;
use super::ldlt::ldlt_factorize;
use super::matrix::{dot, norm_inf, Matrix};
use super::qr::pivoted_qr;
use thiserror::Error;

#[derive(Clone, Debug)]
pub struct QpData {
    pub w: Matrix,
    pub g: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl QpData {
    pub fn num_variables(&self) -> usize {
        self.g.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, d: &[f64]) -> f64 {
        0.5 * self.w.quadratic_form(d) + dot(&self.g, d)
    }

    fn check_dimensions(&self) -> Result<(), QpError> {
        let n = self.g.len();
        let m = self.b.len();
        let ok = self.w.rows() == n
            && self.w.cols() == n
            && self.a.rows() == m
            && (m == 0 || self.a.cols() == n)
            && self.lower.len() == n
            && self.upper.len() == n;
        if ok {
            Ok(())
        } else {
            Err(QpError::Dimension)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A bound held at equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveBound {
    pub index: usize,
    pub at_upper: bool,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub status: QpStatus,
    /// The solution; for `Infeasible` the phase-I point minimizing `‖A d - b‖₁`.
    pub d: Vec<f64>,
    /// Multipliers of `A d = b` (phase-I multipliers when infeasible).
    pub multipliers_eq: Vec<f64>,
    /// Bound multipliers: nonnegative at lower bounds, nonpositive at upper bounds.
    pub multipliers_bounds: Vec<f64>,
    pub active_set: Vec<ActiveBound>,
    pub objective_value: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QpError {
    #[error("QP iteration limit reached")]
    IterationLimit,
    #[error("QP solution failed its KKT check (residual {0:e})")]
    Inaccurate(f64),
    #[error("inconsistent QP dimensions")]
    Dimension,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Lower,
    Upper,
}

struct CoreResult {
    unbounded: bool,
    d: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    working: Vec<Option<Side>>,
    iterations: usize,
}

/// Stationarity tolerance of returned optimal points.
pub const KKT_TOLERANCE: f64 = 1e-8;

pub fn qp_solve(qp: &QpData, warm_start: Option<&[ActiveBound]>) -> Result<QpSolution, QpError> {
    qp.check_dimensions()?;
    let n = qp.num_variables();
    let m = qp.num_constraints();
    let max_iter = 50 * (n + m) + 200;

    if (0..n).any(|i| qp.lower[i] > qp.upper[i]) {
        return Ok(QpSolution {
            status: QpStatus::Infeasible,
            d: (0..n).map(|i| clamp_start(0.0, qp.lower[i], qp.upper[i])).collect(),
            multipliers_eq: vec![0.0; m],
            multipliers_bounds: vec![0.0; n],
            active_set: Vec::new(),
            objective_value: f64::NAN,
            iterations: 0,
        });
    }

    let mut d: Vec<f64> = (0..n).map(|i| clamp_start(0.0, qp.lower[i], qp.upper[i])).collect();
    let mut working: Vec<Option<Side>> = (0..n).map(|i| at_bound(d[i], qp.lower[i], qp.upper[i])).collect();
    if let Some(ws) = warm_start {
        for ab in ws.iter().filter(|ab| ab.index < n) {
            let (i, bound) = if ab.at_upper {
                (ab.index, qp.upper[ab.index])
            } else {
                (ab.index, qp.lower[ab.index])
            };
            if bound.is_finite() {
                d[i] = bound;
                working[i] = Some(if ab.at_upper { Side::Upper } else { Side::Lower });
            }
        }
    }

    let mut iterations = 0;
    let residual: Vec<f64> = sub(&qp.a.mul_vec(&d), &qp.b);
    let b_scale = 1.0 + norm_inf(&qp.b);
    if m > 0 && norm_inf(&residual) > 1e-12 * b_scale {
        let phase1 = phase_one(qp, &d, &working, max_iter)?;
        iterations += phase1.iterations;
        let infeasibility: f64 = phase1.d[n..].iter().sum();
        if infeasibility > 1e-9 * b_scale {
            let dd = phase1.d[..n].to_vec();
            return Ok(QpSolution {
                status: QpStatus::Infeasible,
                objective_value: qp.objective(&dd),
                d: dd,
                multipliers_eq: phase1.y,
                multipliers_bounds: phase1.z[..n].to_vec(),
                active_set: active_list(&phase1.working[..n]),
                iterations,
            });
        }
        d = phase1.d[..n].to_vec();
        working = phase1.working[..n].to_vec();
    }

    let core = active_set_core(
        &qp.w,
        &qp.g,
        &qp.a,
        &qp.lower,
        &qp.upper,
        d,
        working,
        max_iter,
    )?;
    iterations += core.iterations;
    let status = if core.unbounded {
        QpStatus::Unbounded
    } else {
        QpStatus::Optimal
    };
    let sol = QpSolution {
        status,
        objective_value: qp.objective(&core.d),
        d: core.d,
        multipliers_eq: core.y,
        multipliers_bounds: core.z,
        active_set: active_list(&core.working),
        iterations,
    };
    if status == QpStatus::Optimal {
        let r = kkt_residual(qp, &sol);
        if !(r <= KKT_TOLERANCE) {
            return Err(QpError::Inaccurate(r));
        }
    }
    Ok(sol)
}

/// Largest violation of the QP optimality conditions, each scaled by its
/// reference tolerance (a value ≤ `KKT_TOLERANCE` passes every check).
pub fn kkt_residual(qp: &QpData, sol: &QpSolution) -> f64 {
    let n = qp.num_variables();
    let d = &sol.d;
    let z = &sol.multipliers_bounds;
    let mut grad = qp.w.mul_vec(d);
    for i in 0..n {
        grad[i] += qp.g[i];
    }
    let aty = qp.a.tr_mul_vec(&sol.multipliers_eq);
    let stat = (0..n)
        .map(|i| (grad[i] - aty[i] - z[i]).abs())
        .fold(0.0, f64::max);
    let mut worst = stat / (1.0 + norm_inf(&qp.g));
    let feas = norm_inf(&sub(&qp.a.mul_vec(d), &qp.b)) / (1.0 + norm_inf(&qp.b));
    worst = worst.max(feas);
    for i in 0..n {
        let lo = (qp.lower[i] - d[i]).max(0.0);
        let hi = (d[i] - qp.upper[i]).max(0.0);
        worst = worst.max(lo).max(hi);
        if z[i] > 0.0 {
            worst = worst.max((z[i] * (d[i] - qp.lower[i])).abs());
        } else if z[i] < 0.0 {
            worst = worst.max((z[i] * (qp.upper[i] - d[i])).abs());
        }
    }
    worst
}

fn phase_one(
    qp: &QpData,
    d0: &[f64],
    working: &[Option<Side>],
    max_iter: usize,
) -> Result<CoreResult, QpError> {
    let n = qp.num_variables();
    let m = qp.num_constraints();
    let ne = n + 2 * m;
    let mut a = Matrix::zeros(m, ne);
    for j in 0..m {
        a.row_mut(j)[..n].copy_from_slice(qp.a.row(j));
        a[(j, n + j)] = -1.0;
        a[(j, n + m + j)] = 1.0;
    }
    let mut g = vec![0.0; ne];
    g[n..].iter_mut().for_each(|v| *v = 1.0);
    let mut lower = qp.lower.clone();
    let mut upper = qp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, 2 * m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, 2 * m));

    let r = sub(&qp.a.mul_vec(d0), &qp.b);
    let mut start = d0.to_vec();
    start.extend(r.iter().map(|v| v.max(0.0)));
    start.extend(r.iter().map(|v| (-v).max(0.0)));
    let mut ws = working.to_vec();
    ws.extend(start[n..].iter().map(|&u| if u == 0.0 { Some(Side::Lower) } else { None }));
    active_set_core(&Matrix::zeros(ne, ne), &g, &a, &lower, &upper, start, ws, max_iter)
}

#[derive(Clone, Copy, PartialEq)]
enum StepKind {
    Newton,
    Ray,
}

#[allow(clippy::too_many_arguments)]
fn active_set_core(
    w: &Matrix,
    g: &[f64],
    a: &Matrix,
    lower: &[f64],
    upper: &[f64],
    mut d: Vec<f64>,
    mut working: Vec<Option<Side>>,
    max_iter: usize,
) -> Result<CoreResult, QpError> {
    let n = g.len();
    let m = a.rows();
    let g_scale = 1.0 + norm_inf(g);
    let w_scale = w.max_abs();
    let mut previous_newton_unblocked = false;

    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&i| working[i].is_none()).collect();
        let mut q = w.mul_vec(&d);
        for i in 0..n {
            q[i] += g[i];
        }
        let rows: Vec<usize> = (0..m).collect();
        let a_free_t = a.select(&rows, &free).transpose();
        let qr = pivoted_qr(&a_free_t);
        let z_basis = qr.left_null_space();
        let k = z_basis.cols();
        let q_free: Vec<f64> = free.iter().map(|&i| q[i]).collect();
        let stat_scale = g_scale + w_scale * norm_inf(&d);

        let mut direction: Option<(Vec<f64>, StepKind)> = None;
        if k > 0 {
            let gz = z_basis.tr_mul_vec(&q_free);
            let w_ff = w.select(&free, &free);
            let hr = z_basis.transpose().matmul(&w_ff).matmul(&z_basis);
            let reduced_small = norm_inf(&gz) <= 1e-13 * stat_scale;
            let (pz, kind) = reduced_step(&hr, &gz, stat_scale);
            let stationary = match kind {
                StepKind::Newton => reduced_small || previous_newton_unblocked,
                StepKind::Ray => false,
            };
            if !stationary {
                let p_free = z_basis.mul_vec(&pz);
                if norm_inf(&p_free) > 0.0 {
                    let mut p = vec![0.0; n];
                    for (c, &i) in free.iter().enumerate() {
                        p[i] = p_free[c];
                    }
                    direction = Some((p, kind));
                }
            }
        }

        match direction {
            Some((p, kind)) => {
                let alpha_cap = if kind == StepKind::Newton { 1.0 } else { f64::INFINITY };
                let mut alpha = alpha_cap;
                let mut blocking = None;
                for &i in &free {
                    let ratio = if p[i] < 0.0 && lower[i].is_finite() {
                        ((lower[i] - d[i]) / p[i], Side::Lower)
                    } else if p[i] > 0.0 && upper[i].is_finite() {
                        ((upper[i] - d[i]) / p[i], Side::Upper)
                    } else {
                        continue;
                    };
                    let ratio = (ratio.0.max(0.0), ratio.1);
                    let hits_full_step = kind == StepKind::Newton && blocking.is_none() && ratio.0 == alpha;
                    if ratio.0 < alpha || hits_full_step {
                        alpha = ratio.0;
                        blocking = Some((i, ratio.1));
                    }
                }
                if alpha.is_infinite() {
                    return Ok(CoreResult {
                        unbounded: true,
                        d,
                        y: vec![0.0; m],
                        z: vec![0.0; n],
                        working,
                        iterations: iter + 1,
                    });
                }
                for &i in &free {
                    d[i] += alpha * p[i];
                    d[i] = d[i].clamp(lower[i], upper[i]);
                }
                previous_newton_unblocked = blocking.is_none() && kind == StepKind::Newton;
                if let Some((i, side)) = blocking {
                    d[i] = if side == Side::Lower { lower[i] } else { upper[i] };
                    working[i] = Some(side);
                }
            }
            None => {
                let y = if m > 0 && !free.is_empty() {
                    qr.least_squares(&q_free)
                } else {
                    vec![0.0; m]
                };
                let aty = a.tr_mul_vec(&y);
                let mut z = vec![0.0; n];
                let mut release: Option<(usize, f64)> = None;
                let mult_tol = 1e-11 * stat_scale;
                for i in 0..n {
                    let Some(side) = working[i] else { continue };
                    z[i] = q[i] - aty[i];
                    if lower[i] == upper[i] {
                        continue;
                    }
                    let violation = match side {
                        Side::Lower => -z[i],
                        Side::Upper => z[i],
                    };
                    if violation > mult_tol && release.is_none_or(|(_, v)| violation > v) {
                        release = Some((i, violation));
                    }
                }
                match release {
                    Some((i, _)) => {
                        working[i] = None;
                        previous_newton_unblocked = false;
                    }
                    None => {
                        for i in 0..n {
                            match working[i] {
                                Some(Side::Lower) if lower[i] != upper[i] => z[i] = z[i].max(0.0),
                                Some(Side::Upper) if lower[i] != upper[i] => z[i] = z[i].min(0.0),
                                _ => {}
                            }
                        }
                        return Ok(CoreResult {
                            unbounded: false,
                            d,
                            y,
                            z,
                            working,
                            iterations: iter + 1,
                        });
                    }
                }
            }
        }
    }
    Err(QpError::IterationLimit)
}

/// Step in the reduced space: Newton when the reduced Hessian is positive
/// definite, otherwise a direction of negative or zero curvature.
fn reduced_step(hr: &Matrix, gz: &[f64], stat_scale: f64) -> (Vec<f64>, StepKind) {
    let k = gz.len();
    if hr.max_abs() == 0.0 {
        if norm_inf(gz) <= 1e-13 * stat_scale {
            return (vec![0.0; k], StepKind::Newton);
        }
        return (gz.iter().map(|v| -v).collect(), StepKind::Ray);
    }
    let f = ldlt_factorize(hr);
    if f.inertia().positive == k {
        if let Ok(s) = f.solve(gz) {
            return (s.iter().map(|v| -v).collect(), StepKind::Newton);
        }
    }
    let (vals, vecs) = symmetric_eigen(hr);
    let eig_tol = 1e-10 * vals.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if vals[0] < -eig_tol {
        let mut v = vecs.column(0);
        if dot(&v, gz) > 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        return (v, StepKind::Ray);
    }
    let mut null_part = vec![0.0; k];
    let mut newton = vec![0.0; k];
    let mut has_null_gradient = false;
    for (j, &lam) in vals.iter().enumerate() {
        let v = vecs.column(j);
        let c = dot(&v, gz);
        if lam <= eig_tol {
            if c.abs() > 1e-13 * stat_scale {
                has_null_gradient = true;
            }
            for (t, vi) in null_part.iter_mut().zip(&v) {
                *t -= c * vi;
            }
        } else {
            for (t, vi) in newton.iter_mut().zip(&v) {
                *t -= c / lam * vi;
            }
        }
    }
    if has_null_gradient {
        (null_part, StepKind::Ray)
    } else {
        (newton, StepKind::Newton)
    }
}

fn clamp_start(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

fn at_bound(v: f64, lo: f64, hi: f64) -> Option<Side> {
    if v == lo {
        Some(Side::Lower)
    } else if v == hi {
        Some(Side::Upper)
    } else {
        None
    }
}

fn active_list(working: &[Option<Side>]) -> Vec<ActiveBound> {
    working
        .iter()
        .enumerate()
        .filter_map(|(index, s)| {
            s.map(|side| ActiveBound {
                index,
                at_upper: side == Side::Upper,
            })
        })
        .collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod degenerate_tests {
    use super::*;

    // Zero curvature on a null-space direction with a gradient that vanishes
    // only up to roundoff.
    #[test]
    fn flat_phase_one_direction() {
        let mut w = Matrix::zeros(6, 6);
        w[(0, 0)] = 1e-4;
        w[(1, 1)] = 1e-4;
        let qp = QpData {
            w,
            g: vec![3.0, 3.0, 1.0, 1.0, 1.0, 1.0],
            a: Matrix::from_rows(&[vec![3.0, 3.0, -1.0, 0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0, -1.0, 0.0, 1.0]]),
            b: vec![-3.5, 0.0],
            lower: vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, 0.0, 0.0, 0.0],
            upper: vec![f64::INFINITY; 6],
        };
        let sol = qp_solve(&qp, None).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.d[0] + 7.0 / 12.0).abs() < 1e-12 && (sol.d[1] + 7.0 / 12.0).abs() < 1e-12);
    }
}
