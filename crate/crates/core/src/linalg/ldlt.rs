//! Symmetric indefinite `LDLᵀ` factorization with Bunch–Parlett pivoting.

use super::matrix::Matrix;
use super::LinalgError;

/// Counts of positive, negative and zero eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl Inertia {
    pub fn new(positive: usize, negative: usize, zero: usize) -> Self {
        Self {
            positive,
            negative,
            zero,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Pivot {
    One(f64),
    /// Symmetric 2×2 block `[[a, b], [b, c]]`.
    Two(f64, f64, f64),
}

/// `P M Pᵀ = L D Lᵀ` with `L` unit lower triangular and `D` block diagonal.
#[derive(Clone, Debug)]
pub struct Factorization {
    l: Matrix,
    pivots: Vec<(usize, Pivot)>,
    perm: Vec<usize>,
    inertia: Inertia,
    /// Pivots classified as zero; the factorization is then only usable for inertia.
    zero_pivot: Vec<bool>,
}

const BK_ALPHA: f64 = 0.640_388_203_202_208_4; // (1 + sqrt(17)) / 8
const ZERO_PIVOT_RTOL: f64 = 1e-13;

impl Factorization {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    pub fn unit_lower(&self) -> &Matrix {
        &self.l
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Dense block-diagonal factor `D`.
    pub fn block_diagonal(&self) -> Matrix {
        let n = self.dim();
        let mut d = Matrix::zeros(n, n);
        for &(k, p) in &self.pivots {
            match p {
                Pivot::One(v) => d[(k, k)] = v,
                Pivot::Two(a, b, c) => {
                    d[(k, k)] = a;
                    d[(k + 1, k)] = b;
                    d[(k, k + 1)] = b;
                    d[(k + 1, k + 1)] = c;
                }
            }
        }
        d
    }

    /// Rebuilds `M = Pᵀ L D Lᵀ P`.
    pub fn reconstruct(&self) -> Matrix {
        let ld = self.l.matmul(&self.block_diagonal());
        let pmp = ld.matmul(&self.l.transpose());
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(self.perm[i], self.perm[j])] = pmp[(i, j)];
            }
        }
        m
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        solve_factorized(self, rhs)
    }
}

/// Factorizes a symmetric matrix. Only the lower triangle is read.
pub fn ldlt_factorize(m: &Matrix) -> Factorization {
    assert!(m.is_square(), "ldlt_factorize needs a square matrix");
    let n = m.rows();
    let mut a = m.clone();
    for i in 0..n {
        for j in 0..i {
            a[(j, i)] = a[(i, j)];
        }
    }
    let row_scale: Vec<f64> = (0..n)
        .map(|i| a.row(i).iter().fold(0.0f64, |s, v| s.max(v.abs())))
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = Matrix::identity(n);
    let mut pivots = Vec::new();
    let mut zero_pivot = vec![false; n];
    let mut inertia = Inertia::new(0, 0, 0);

    let mut k = 0;
    while k < n {
        // Bunch–Parlett: search the whole trailing block so that rank
        // deficiency shows up as a trailing block at rounding level.
        let (p, diag_max) = (k..n).fold((k, 0.0f64), |best, i| {
            if a[(i, i)].abs() > best.1 {
                (i, a[(i, i)].abs())
            } else {
                best
            }
        });
        let (mut r, mut c, mut off_max) = (k, k, 0.0f64);
        for j in k..n {
            for i in j + 1..n {
                if a[(i, j)].abs() > off_max {
                    (r, c, off_max) = (i, j, a[(i, j)].abs());
                }
            }
        }
        let two_by_two = diag_max < BK_ALPHA * off_max;
        if two_by_two {
            symmetric_swap(&mut a, &mut l, &mut perm, k, c);
            if r == k {
                r = c;
            }
            symmetric_swap(&mut a, &mut l, &mut perm, k + 1, r);
        } else {
            symmetric_swap(&mut a, &mut l, &mut perm, k, p);
        }

        if !two_by_two {
            let d = a[(k, k)];
            let lambda = column_max(&a, k);
            let tol = ZERO_PIVOT_RTOL * row_scale[perm[k]];
            pivots.push((k, Pivot::One(d)));
            if d.abs().max(lambda) <= tol {
                zero_pivot[k] = true;
                inertia.zero += 1;
                for i in k + 1..n {
                    a[(i, k)] = 0.0;
                    a[(k, i)] = 0.0;
                }
                k += 1;
                continue;
            }
            classify(d, tol, &mut inertia, &mut zero_pivot[k]);
            if !zero_pivot[k] {
                for i in k + 1..n {
                    l[(i, k)] = a[(i, k)] / d;
                }
                for j in k + 1..n {
                    let ljk = a[(j, k)];
                    if ljk == 0.0 {
                        continue;
                    }
                    for i in j..n {
                        a[(i, j)] -= l[(i, k)] * ljk;
                    }
                }
                for j in k + 1..n {
                    for i in j + 1..n {
                        a[(j, i)] = a[(i, j)];
                    }
                }
            }
            k += 1;
        } else {
            let (p, q, s) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
            pivots.push((k, Pivot::Two(p, q, s)));
            let tol = ZERO_PIVOT_RTOL * row_scale[perm[k]].max(row_scale[perm[k + 1]]);
            let (e1, e2) = eigen_2x2(p, q, s);
            classify(e1, tol, &mut inertia, &mut zero_pivot[k]);
            classify(e2, tol, &mut inertia, &mut zero_pivot[k + 1]);
            let det = p * s - q * q;
            // D⁻¹ = [[s, -q], [-q, p]] / det
            for i in k + 2..n {
                let (ai0, ai1) = (a[(i, k)], a[(i, k + 1)]);
                l[(i, k)] = (ai0 * s - ai1 * q) / det;
                l[(i, k + 1)] = (ai1 * p - ai0 * q) / det;
            }
            for j in k + 2..n {
                let (aj0, aj1) = (a[(j, k)], a[(j, k + 1)]);
                for i in j..n {
                    a[(i, j)] -= l[(i, k)] * aj0 + l[(i, k + 1)] * aj1;
                }
            }
            for j in k + 2..n {
                for i in j + 1..n {
                    a[(j, i)] = a[(i, j)];
                }
            }
            k += 2;
        }
    }

    Factorization {
        l,
        pivots,
        perm,
        inertia,
        zero_pivot,
    }
}

/// Solves `M x = rhs` using a factorization of `M`.
pub fn solve_factorized(f: &Factorization, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = f.dim();
    assert_eq!(rhs.len(), n);
    if f.inertia.zero > 0 || f.zero_pivot.iter().any(|&z| z) {
        return Err(LinalgError::SingularMatrix);
    }
    let mut w: Vec<f64> = f.perm.iter().map(|&p| rhs[p]).collect();
    for j in 0..n {
        let wj = w[j];
        if wj != 0.0 {
            for i in j + 1..n {
                w[i] -= f.l[(i, j)] * wj;
            }
        }
    }
    for &(k, p) in &f.pivots {
        match p {
            Pivot::One(d) => w[k] /= d,
            Pivot::Two(a, b, c) => {
                let det = a * c - b * b;
                let (w0, w1) = (w[k], w[k + 1]);
                w[k] = (c * w0 - b * w1) / det;
                w[k + 1] = (a * w1 - b * w0) / det;
            }
        }
    }
    for j in (0..n).rev() {
        let mut s = w[j];
        for i in j + 1..n {
            s -= f.l[(i, j)] * w[i];
        }
        w[j] = s;
    }
    let mut x = vec![0.0; n];
    for (i, &p) in f.perm.iter().enumerate() {
        x[p] = w[i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(LinalgError::SingularMatrix)
    }
}

fn column_max(a: &Matrix, k: usize) -> f64 {
    (k + 1..a.rows()).fold(0.0f64, |s, i| s.max(a[(i, k)].abs()))
}

fn swap_rows_and_columns(a: &mut Matrix, i: usize, j: usize) {
    let n = a.rows();
    for c in 0..n {
        let t = a[(i, c)];
        a[(i, c)] = a[(j, c)];
        a[(j, c)] = t;
    }
    for r in 0..n {
        let t = a[(r, i)];
        a[(r, i)] = a[(r, j)];
        a[(r, j)] = t;
    }
}

fn symmetric_swap(a: &mut Matrix, l: &mut Matrix, perm: &mut [usize], i: usize, j: usize) {
    if i == j {
        return;
    }
    swap_rows_and_columns(a, i, j);
    for c in 0..i.min(j) {
        let t = l[(i, c)];
        l[(i, c)] = l[(j, c)];
        l[(j, c)] = t;
    }
    perm.swap(i, j);
}

fn eigen_2x2(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean + rad, mean - rad)
}

fn classify(v: f64, tol: f64, inertia: &mut Inertia, zero: &mut bool) {
    if v.abs() <= tol || !v.is_finite() {
        inertia.zero += 1;
        *zero = true;
    } else if v > 0.0 {
        inertia.positive += 1;
    } else {
        inertia.negative += 1;
    }
}
