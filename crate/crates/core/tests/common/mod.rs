//! Independent reference implementations used to check the solver's building blocks.
#![allow(dead_code)]

use nlpkit::linalg::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Classical (largest off-diagonal pivot) Jacobi eigenvalue iteration.
pub fn jacobi_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _ in 0..(200 * n * n).max(10) {
        let (mut p, mut q, mut big) = (0, 0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        let diag_scale = (0..n).fold(0.0f64, |s, i| s.max(a[i][i].abs()));
        if big <= 1e-15 * diag_scale.max(1e-300) || big == 0.0 {
            break;
        }
        let phi = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = phi.sin_cos();
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(m: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    let scale = m.max_abs().max(1e-300);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..=n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Some(x)
}

pub struct QpCase {
    pub w: Matrix,
    pub g: Vec<f64>,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Random strictly convex QP with box bounds and a nonempty feasible set.
pub fn random_convex_qp(rng: &mut ChaCha8Rng) -> QpCase {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=2usize.min(n));
    let b_mat = Matrix::from_row_major(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut w = b_mat.transpose().matmul(&b_mat);
    w.add_diagonal(0.1);
    let g = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..-0.1)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let a = Matrix::from_row_major(m, n, (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let x_feas: Vec<f64> = (0..n).map(|i| rng.gen_range(lower[i]..upper[i])).collect();
    let b = a.mul_vec(&x_feas);
    QpCase { w, g, a, b, lower, upper }
}

/// Exhaustive active-set enumeration for convex QPs: every assignment of each
/// variable to {free, lower, upper} is solved as an equality-constrained QP and
/// the best primal-feasible face minimizer is returned.
pub fn enumerate_qp(c: &QpCase) -> Option<(Vec<f64>, f64)> {
    let n = c.g.len();
    let m = c.b.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut t = code;
        for s in state.iter_mut() {
            *s = (t % 3) as u8;
            t /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut d = vec![0.0; n];
        for i in 0..n {
            d[i] = match state[i] {
                1 => c.lower[i],
                2 => c.upper[i],
                _ => 0.0,
            };
        }
        let nf = free.len();
        let size = nf + m;
        let mut k = Matrix::zeros(size, size);
        let mut rhs = vec![0.0; size];
        for (a_, &i) in free.iter().enumerate() {
            for (b_, &j) in free.iter().enumerate() {
                k[(a_, b_)] = c.w[(i, j)];
            }
            let fixed_part: f64 = (0..n).filter(|j| state[*j] != 0).map(|j| c.w[(i, j)] * d[j]).sum();
            rhs[a_] = -c.g[i] - fixed_part;
            for r in 0..m {
                k[(a_, nf + r)] = c.a[(r, i)];
                k[(nf + r, a_)] = c.a[(r, i)];
            }
        }
        for r in 0..m {
            let fixed_part: f64 = (0..n).filter(|j| state[*j] != 0).map(|j| c.a[(r, j)] * d[j]).sum();
            rhs[nf + r] = c.b[r] - fixed_part;
        }
        let sol = if size == 0 {
            Some(vec![])
        } else {
            gauss_solve(&k, &rhs)
        };
        let Some(sol) = sol else { continue };
        for (a_, &i) in free.iter().enumerate() {
            d[i] = sol[a_];
        }
        let feasible = (0..n).all(|i| d[i] >= c.lower[i] - 1e-10 && d[i] <= c.upper[i] + 1e-10)
            && (0..m).all(|r| {
                let ad: f64 = (0..n).map(|j| c.a[(r, j)] * d[j]).sum();
                (ad - c.b[r]).abs() <= 1e-9
            });
        if !feasible {
            continue;
        }
        let obj = 0.5 * c.w.quadratic_form(&d) + c.g.iter().zip(&d).map(|(x, y)| x * y).sum::<f64>();
        if best.as_ref().is_none_or(|(_, f)| obj < *f) {
            best = Some((d, obj));
        }
    }
    best
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
