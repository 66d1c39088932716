//! Dense complex linear algebra for small Hermitian problems.

mod eigen;
mod herm;
mod matrix;
mod subspace;

pub use eigen::{herm_eigen, HermEigen};
pub use herm::{
    joint_kernel_projection, kernel_basis, kernel_projection, numerical_rank, psd_pinv_sqrt, psd_sqrt,
    psd_sqrt_herm, support_basis, support_projection, Effect, HermMatrix, EFFECT_CLAMP, HERMITIAN_ATOL,
};
pub use matrix::{Matrix, C64};
pub use subspace::{compress, intersect, Subspace, BASIS_ATOL};

pub(crate) use matrix::reorthonormalize_columns;

/// Hilbert-Schmidt norm of the commutator `[a, b]`.
pub fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    (&(a * b) - &(b * a)).frobenius_norm()
}
