use super::eigen::herm_eigen;
use super::herm::HermMatrix;
use super::matrix::{fix_column_phases, reorthonormalize_columns, Matrix, ONE};
use crate::error::{Error, Result};
use crate::tol::Tolerances;

/// Orthonormality slack for subspace bases.
pub const BASIS_ATOL: f64 = 1e-12;

/// A subspace of `C^ambient`, held as a matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: Matrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { ambient, basis: Matrix::identity(ambient) }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let idx: alloc::vec::Vec<usize> = indices.into_iter().collect();
        let mut basis = Matrix::zeros(ambient, idx.len());
        for (j, &i) in idx.iter().enumerate() {
            basis[(i, j)] = ONE;
        }
        Self { ambient, basis }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::DimensionMismatch { expected: basis.rows(), found: basis.cols() });
        }
        let gram = basis.adjoint_mul(&basis);
        let err = gram.distance(&Matrix::identity(basis.cols()));
        if err > BASIS_ATOL * (basis.cols().max(1) as f64) {
            return Err(Error::IsometryViolation { residual: err });
        }
        Ok(Self { ambient: basis.rows(), basis })
    }

    /// Rank-revealing orthonormalization of the column span of `m`.
    ///
    /// Works on the Gram matrix `mᴴm`, so the cost is set by the column
    /// count rather than the ambient dimension.
    pub fn span_of(m: &Matrix, tol: &Tolerances) -> Self {
        let eig = herm_eigen(&m.adjoint_mul(m));
        let thr = tol.rank_threshold(eig.spectral_radius());
        let (vals, vecs) = eig.select(|l| l > thr);
        let mut basis = m * &vecs;
        for (j, &l) in vals.iter().enumerate() {
            let s = 1.0 / libm::sqrt(l);
            for i in 0..basis.rows() {
                basis[(i, j)] *= s;
            }
        }
        reorthonormalize_columns(&mut basis);
        fix_column_phases(&mut basis);
        Self { ambient: m.rows(), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// Orthogonal projection onto the subspace, `ambient × ambient`.
    pub fn projection(&self) -> HermMatrix {
        HermMatrix::from_computed(&(&self.basis * &self.basis.adjoint()))
    }

    /// Largest distance of a unit basis vector of `self` from `other`.
    pub fn excess_over(&self, other: &Subspace) -> f64 {
        let inner = other.basis.adjoint_mul(&self.basis);
        let back = &other.basis * &inner;
        let resid = &self.basis - &back;
        (0..resid.cols())
            .map(|j| libm::sqrt(resid.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>()))
            .fold(0.0, f64::max)
    }
}

/// `a ∩ b`, as the kernel of `(I - P_a) + (I - P_b)`.
///
/// Vectors of `a` already annihilate `I - P_a`, so the kernel is taken of the
/// remaining term compressed to `a`'s basis: `B_aᴴ(I - P_b)B_a`.
pub fn intersect(a: &Subspace, b: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    if a.ambient != b.ambient {
        return Err(Error::DimensionMismatch { expected: a.ambient, found: b.ambient });
    }
    let r = a.dim();
    if r == 0 || b.dim() == 0 {
        return Ok(Subspace::zero(a.ambient));
    }
    let overlap = b.basis.adjoint_mul(&a.basis);
    let inside = overlap.adjoint_mul(&overlap);
    let outside = &Matrix::identity(r) - &inside;
    let eig = herm_eigen(&outside);
    let thr = tol.kernel_threshold(eig.spectral_radius());
    let (_, vecs) = eig.select(|l| l <= thr);
    let mut basis = &a.basis * &vecs;
    reorthonormalize_columns(&mut basis);
    fix_column_phases(&mut basis);
    Ok(Subspace { ambient: a.ambient, basis })
}

/// Matrix of `op` compressed to `s` in its basis: `basisᴴ · op · basis`.
pub fn compress(op: &HermMatrix, s: &Subspace) -> Result<HermMatrix> {
    if op.dim() != s.ambient {
        return Err(Error::DimensionMismatch { expected: s.ambient, found: op.dim() });
    }
    Ok(op.compress_by(&s.basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    fn diag_line() -> Subspace {
        let h = libm::sqrt(0.5);
        Subspace::from_orthonormal(Matrix::from_real_rows(&[&[h], &[h]])).unwrap()
    }

    #[test]
    fn self_intersection() {
        let tol = Tolerances::default();
        let x = Subspace::coordinate(4, [0, 2]);
        let y = intersect(&x, &x, &tol).unwrap();
        assert_eq!(y.dim(), 2);
        assert!(y.projection().distance(&x.projection()) < 1e-14);
    }

    #[test]
    fn diagonal_line_misses_axis() {
        let tol = Tolerances::default();
        let y = intersect(&diag_line(), &Subspace::coordinate(2, [1]), &tol).unwrap();
        assert_eq!(y.dim(), 0);
    }

    #[test]
    fn coordinate_planes_meet_in_a_line() {
        let tol = Tolerances::default();
        let y = intersect(&Subspace::coordinate(3, [0, 1]), &Subspace::coordinate(3, [1, 2]), &tol).unwrap();
        assert_eq!(y.dim(), 1);
        assert!(y.projection().distance(&Subspace::coordinate(3, [1]).projection()) < 1e-14);
    }

    #[test]
    fn compression_examples() {
        let s = diag_line();
        let p2 = HermMatrix::from_real_diag(&[0.0, 1.0]);
        let c = compress(&p2, &s).unwrap();
        assert!((c.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        let id = compress(&HermMatrix::identity(2), &s).unwrap();
        assert!(id.distance(&HermMatrix::identity(1)) < 1e-15);

        // |α|²/‖ξ‖² for ξ = (α, β) = (1 + i, 2).
        let xi = [C64::new(1.0, 1.0), C64::new(2.0, 0.0)];
        let n2: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
        let line = Subspace::span_of(&Matrix::from_columns(2, &[xi.to_vec()]), &Tolerances::default());
        let c1 = compress(&HermMatrix::from_real_diag(&[1.0, 0.0]), &line).unwrap();
        assert!((c1.matrix()[(0, 0)].re - 2.0 / n2).abs() < 1e-15);
    }

    #[test]
    fn span_of_drops_dependent_columns() {
        let m = Matrix::from_real_rows(&[&[1.0, 2.0, 0.0], &[1.0, 2.0, 0.0], &[0.0, 0.0, 0.0]]);
        let s = Subspace::span_of(&m, &Tolerances::default());
        assert_eq!(s.dim(), 1);
        assert!(s.excess_over(&diag_line_in(3)) < 1e-14);
    }

    fn diag_line_in(n: usize) -> Subspace {
        let h = libm::sqrt(0.5);
        let mut b = Matrix::zeros(n, 1);
        b[(0, 0)] = C64::new(h, 0.0);
        b[(1, 0)] = C64::new(h, 0.0);
        Subspace::from_orthonormal(b).unwrap()
    }
}
