use alloc::vec::Vec;

use super::eigen::{herm_eigen, HermEigen};
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Absolute slack for the Hermitian check, scaled by `max(1, max |m_ij|)`.
pub const HERMITIAN_ATOL: f64 = 1e-12;
/// Eigenvalues within this distance outside `[0, 1]` are clamped, not rejected.
pub const EFFECT_CLAMP: f64 = 1e-10;
/// Excursions this small (times the dimension) are eigensolver roundoff and
/// are left alone: clamping would rewrite every entry and make reading a
/// written effect back lossy.
const ROUNDOFF_SLACK: f64 = 64.0 * f64::EPSILON;

/// A square matrix equal to its conjugate transpose. Construction symmetrizes
/// away the sub-tolerance asymmetry so downstream code sees exact symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMatrix(Matrix);

impl HermMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotHermitian { asymmetry: f64::NAN });
        }
        let asymmetry = m.hermitian_defect();
        if asymmetry > HERMITIAN_ATOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(Self(m.hermitian_part()))
    }

    /// For matrices Hermitian by construction up to rounding.
    pub(crate) fn from_computed(m: &Matrix) -> Self {
        Self(m.hermitian_part())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(Matrix::from_real_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn eigen(&self) -> HermEigen {
        herm_eigen(&self.0)
    }

    /// Functional calculus: `f` applied to the spectrum.
    pub fn map_spectrum(&self, f: impl FnMut(f64) -> f64) -> Self {
        Self(self.eigen().reassemble(f))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// `x · self · xᴴ`, symmetrized.
    pub fn congruence(&self, x: &Matrix) -> Self {
        Self::from_computed(&(&(x * &self.0) * &x.adjoint()))
    }

    /// `xᴴ · self · x`, symmetrized.
    pub fn compress_by(&self, x: &Matrix) -> Self {
        Self::from_computed(&x.adjoint_mul(&(&self.0 * x)))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0.distance(&other.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        self.eigen().spectral_radius()
    }

    pub fn sum<'a>(dim: usize, items: impl IntoIterator<Item = &'a HermMatrix>) -> Self {
        let mut acc = Matrix::zeros(dim, dim);
        for h in items {
            acc = &acc + &h.0;
        }
        Self(acc)
    }
}

/// A positive contraction `0 ≤ E ≤ I`, stored with its spectrum in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect(HermMatrix);

impl Effect {
    /// Accepts spectra inside `[-1e-10, 1 + 1e-10]` and clamps them to `[0, 1]`
    /// unless the excursion is at roundoff level.
    pub fn new(h: HermMatrix) -> Result<Self> {
        let eig = h.eigen();
        let (lo, hi) = (eig.min(), eig.max());
        if h.dim() == 0 {
            return Ok(Self(h));
        }
        if lo < -EFFECT_CLAMP || hi > 1.0 + EFFECT_CLAMP {
            return Err(Error::NotEffect { min_eigenvalue: lo, max_eigenvalue: hi });
        }
        let slack = ROUNDOFF_SLACK * h.dim() as f64;
        if lo >= -slack && hi <= 1.0 + slack {
            return Ok(Self(h));
        }
        Ok(Self(HermMatrix(eig.reassemble(|l| l.clamp(0.0, 1.0)))))
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        Self::new(HermMatrix::new(m)?)
    }

    pub(crate) fn from_computed(m: &Matrix) -> Result<Self> {
        Self::new(HermMatrix::from_computed(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(HermMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(HermMatrix::identity(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Result<Self> {
        Self::new(HermMatrix::from_real_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn herm(&self) -> &HermMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &Matrix {
        self.0.matrix()
    }

    /// `I - self`, which is again an effect.
    pub fn complement(&self) -> Self {
        let m = &Matrix::identity(self.dim()) - self.matrix();
        Self::from_computed(&m).expect("complement of an effect is an effect")
    }

    pub fn distance(&self, other: &Effect) -> f64 {
        self.0.distance(&other.0)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.0.frobenius_norm() <= tol
    }
}

/// Principal square root of an effect.
pub fn psd_sqrt(e: &Effect) -> Effect {
    Effect(e.0.map_spectrum(|l| libm::sqrt(l.max(0.0))))
}

/// Principal square root of a general PSD matrix.
pub fn psd_sqrt_herm(m: &HermMatrix, tol: &Tolerances) -> Result<HermMatrix> {
    let eig = m.eigen();
    check_psd(&eig, tol)?;
    Ok(HermMatrix(eig.reassemble(|l| libm::sqrt(l.max(0.0)))))
}

/// Moore-Penrose inverse of the square root: `λ^{-1/2}` on eigenvalues above
/// the kernel threshold, zero on the rest.
pub fn psd_pinv_sqrt(m: &HermMatrix, tol: &Tolerances) -> Result<HermMatrix> {
    let eig = m.eigen();
    check_psd(&eig, tol)?;
    let thr = tol.kernel_threshold(eig.spectral_radius());
    Ok(HermMatrix(eig.reassemble(|l| if l > thr { 1.0 / libm::sqrt(l) } else { 0.0 })))
}

fn check_psd(eig: &HermEigen, tol: &Tolerances) -> Result<()> {
    let min = eig.min();
    if min < -tol.kernel_threshold(eig.spectral_radius()).max(EFFECT_CLAMP) {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

/// Projection onto the eigenvectors with eigenvalue `≤ kernel_tol · max(1, λ_max)`.
pub fn kernel_projection(m: &HermMatrix, tol: &Tolerances) -> Result<HermMatrix> {
    let eig = m.eigen();
    check_psd(&eig, tol)?;
    let thr = tol.kernel_threshold(eig.spectral_radius());
    Ok(HermMatrix(eig.reassemble(|l| if l <= thr { 1.0 } else { 0.0 })))
}

/// Orthonormal basis (as columns) of the numerical kernel of a PSD matrix.
pub fn kernel_basis(m: &HermMatrix, tol: &Tolerances) -> Result<Matrix> {
    let eig = m.eigen();
    check_psd(&eig, tol)?;
    let thr = tol.kernel_threshold(eig.spectral_radius());
    let (_, mut basis) = eig.select(|l| l <= thr);
    super::matrix::fix_column_phases(&mut basis);
    Ok(basis)
}

/// Orthonormal basis of the numerical support of a PSD matrix, with the
/// matching eigenvalues.
pub fn support_basis(m: &HermMatrix, tol: &Tolerances) -> Result<(Vec<f64>, Matrix)> {
    let eig = m.eigen();
    check_psd(&eig, tol)?;
    let thr = tol.kernel_threshold(eig.spectral_radius());
    let (vals, mut basis) = eig.select(|l| l > thr);
    super::matrix::fix_column_phases(&mut basis);
    Ok((vals, basis))
}

/// Projection onto `∩ ker m_i`, computed as the kernel of `Σ m_i`.
/// The empty list gives the identity on `dim`.
pub fn joint_kernel_projection(dim: usize, list: &[&HermMatrix], tol: &Tolerances) -> Result<HermMatrix> {
    for h in list {
        if h.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h.dim() });
        }
    }
    if list.is_empty() {
        return Ok(HermMatrix::identity(dim));
    }
    let sum = HermMatrix::sum(dim, list.iter().copied());
    kernel_projection(&sum, tol)
}

/// `I - kernel_projection(m)`.
pub fn support_projection(m: &HermMatrix, tol: &Tolerances) -> Result<HermMatrix> {
    let k = kernel_projection(m, tol)?;
    Ok(HermMatrix::identity(m.dim()).sub(&k))
}

/// Number of eigenvalues with `|λ| > rank_tol · max(1, max |λ|)`.
pub fn numerical_rank(m: &HermMatrix, tol: &Tolerances) -> usize {
    let eig = m.eigen();
    let thr = tol.rank_threshold(eig.spectral_radius());
    eig.values.iter().filter(|l| l.abs() > thr).count()
}
