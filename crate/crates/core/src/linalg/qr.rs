//! Householder QR with column pivoting.

use super::matrix::{dot, Matrix};

/// `M Π = Q R` for an `r×c` matrix `M`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    /// Full orthogonal factor, `r×r`.
    pub q: Matrix,
    /// Upper trapezoidal factor, `r×c`.
    pub r: Matrix,
    /// Column `j` of `M Π` is column `perm[j]` of `M`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

const RANK_RTOL: f64 = 1e-11;

pub fn pivoted_qr(m: &Matrix) -> PivotedQr {
    let (rows, cols) = (m.rows(), m.cols());
    let mut r = m.clone();
    let mut q = Matrix::identity(rows);
    let mut perm: Vec<usize> = (0..cols).collect();
    let mut norms: Vec<f64> = (0..cols).map(|j| col_norm2(&r, j, 0)).collect();
    let steps = rows.min(cols);
    let mut rank = 0;
    let mut first_norm = 0.0;

    for k in 0..steps {
        let (mut best, mut best_norm) = (k, -1.0);
        for (j, &nj) in norms.iter().enumerate().skip(k) {
            if nj > best_norm {
                best = j;
                best_norm = nj;
            }
        }
        if best != k {
            for i in 0..rows {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, best)];
                r[(i, best)] = t;
            }
            norms.swap(k, best);
            perm.swap(k, best);
        }
        let alpha = col_norm2(&r, k, k).sqrt();
        if k == 0 {
            first_norm = alpha;
        }
        if alpha <= RANK_RTOL * first_norm || alpha == 0.0 {
            break;
        }
        rank += 1;
        let x0 = r[(k, k)];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] -= beta;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for j in k..cols {
                let s: f64 = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
                for i in k..rows {
                    r[(i, j)] -= s * v[i - k];
                }
            }
            for i in 0..rows {
                let s: f64 = (k..rows).map(|c| q[(i, c)] * v[c - k]).sum::<f64>() * 2.0 / vnorm2;
                for c in k..rows {
                    q[(i, c)] -= s * v[c - k];
                }
            }
        }
        for i in k + 1..rows {
            r[(i, k)] = 0.0;
        }
        for (j, nj) in norms.iter_mut().enumerate().skip(k + 1) {
            *nj = col_norm2(&r, j, k + 1);
        }
    }
    PivotedQr { q, r, perm, rank }
}

impl PivotedQr {
    /// Orthonormal basis of the null space of `Mᵀ`, i.e. of vectors `v` with `vᵀM = 0`.
    pub fn left_null_space(&self) -> Matrix {
        let rows = self.q.rows();
        let idx: Vec<usize> = (self.rank..rows).collect();
        let all: Vec<usize> = (0..rows).collect();
        self.q.select(&all, &idx)
    }

    /// Basic least-squares solution of `M w ≈ b`.
    pub fn least_squares(&self, b: &[f64]) -> Vec<f64> {
        let qtb = self.q.tr_mul_vec(b);
        let k = self.rank;
        let mut w = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = qtb[i];
            for j in i + 1..k {
                s -= self.r[(i, j)] * w[j];
            }
            w[i] = s / self.r[(i, i)];
        }
        let mut out = vec![0.0; self.perm.len()];
        for (j, &wj) in w.iter().enumerate() {
            out[self.perm[j]] = wj;
        }
        out
    }
}

fn col_norm2(m: &Matrix, j: usize, from: usize) -> f64 {
    (from..m.rows()).map(|i| m[(i, j)] * m[(i, j)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_null_space() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![0.0, 0.0]]);
        let qr = pivoted_qr(&m);
        assert_eq!(qr.rank, 1);
        let z = qr.left_null_space();
        assert_eq!(z.cols(), 2);
        let zt_m = z.transpose().matmul(&m);
        assert!(zt_m.max_abs() < 1e-14);
    }

    #[test]
    fn least_squares_consistent_system() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]);
        let w = pivoted_qr(&m).least_squares(&[1.0, 4.0, 3.0]);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14);
    }
}
