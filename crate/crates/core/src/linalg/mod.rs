//! Dense linear algebra: `LDLᵀ` with inertia, QR, eigenvalues and an active-set QP solver.

pub mod eigen;
pub mod inertia;
pub mod ldlt;
pub mod matrix;
pub mod qp;
pub mod qr;

pub use inertia::{assemble_kkt, convexify, inertia_correct, CorrectedFactorization, RegularizationSchedule};
pub use ldlt::{ldlt_factorize, solve_factorized, Factorization, Inertia};
pub use matrix::{dot, norm_1, norm_2, norm_inf, Matrix};
pub use qp::{qp_solve, ActiveBound, QpData, QpError, QpSolution, QpStatus};

use thiserror::Error;

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("inertia correction exhausted its regularization schedule")]
    RegularizationFailed,
}
