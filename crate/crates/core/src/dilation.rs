//! Minimal Naimark dilation of a residual chain and the geometry of its
//! tail subspaces.
//!
//! The dilation space is `K = K_1 ⊕ … ⊕ K_N` with `K_n ≅ range(B_n)`,
//! `B_n = A_n^{1/2} R_{n-1}^{1/2}`. Every projection in play (`P_n`, `Q_n`,
//! `P_{[n,m]}`) is a mask over contiguous row blocks, so none of them is
//! ever formed as a `D × D` matrix.

use alloc::format;
use alloc::vec::Vec;

use crate::chain::{run_chain, ResidualChain};
use crate::error::{Error, Result};
use crate::linalg::{
    intersect, numerical_rank, psd_sqrt, support_basis, Effect, HermMatrix, Matrix, Subspace,
};
use crate::tol::Tolerances;

/// Row range `[offset, offset + size)` of one block `K_n` inside `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub offset: usize,
    pub size: usize,
}

impl Block {
    pub fn end(&self) -> usize {
        self.offset + self.size
    }
}

#[derive(Clone, Debug)]
pub struct NaimarkDilation {
    h_dim: usize,
    k_dim: usize,
    v: Matrix,
    blocks: Vec<Block>,
    /// `W_n`: orthonormal basis of `range(B_n)` in `H`, with `B_n = W_n · v_n`.
    range_bases: Vec<Matrix>,
    drivers: Vec<Effect>,
    chain: ResidualChain,
    tol: Tolerances,
}

/// The three defining identities, measured in Frobenius norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DilationResiduals {
    /// `‖VᴴV − I‖`.
    pub isometry: f64,
    /// `max_n ‖VᴴP_nV − T_n‖`.
    pub extraction: f64,
    /// `max_n ‖VᴴQ_nV − R_n‖`, including `n = 0`.
    pub tail: f64,
    /// `max_n ‖W_n v_n − B_n‖`: block rows are coordinates of `range(B_n)`.
    pub factorization: f64,
}

impl DilationResiduals {
    pub fn max(&self) -> f64 {
        self.isometry.max(self.extraction).max(self.tail).max(self.factorization)
    }
}

/// Builds the minimal dilation. The chain of `drivers` must be exhaustive
/// (`‖R_N‖ ≤ check_tol`); append an identity driver to absorb the residual.
pub fn build_dilation(drivers: &[Effect], tol: &Tolerances) -> Result<NaimarkDilation> {
    tol.validate()?;
    let chain = run_chain(drivers)?;
    let residual_norm = chain.final_residual().herm().operator_norm();
    if residual_norm > tol.check_tol {
        return Err(Error::ChainNotExhaustive { residual_norm });
    }
    let d = chain.dim();
    let mut rows: Vec<Matrix> = Vec::with_capacity(drivers.len());
    let mut range_bases = Vec::with_capacity(drivers.len());
    let mut blocks = Vec::with_capacity(drivers.len());
    let mut offset = 0;
    for (n, t) in chain.extracted.iter().enumerate() {
        // T_n = B_nᴴB_n, so its nonzero spectrum gives the singular values of
        // B_n and its eigenvectors the right singular vectors.
        let eig = t.herm().eigen();
        let thr = tol.rank_threshold(eig.spectral_radius());
        let (vals, vecs) = eig.select(|l| l.abs() > thr);
        let r = vals.len();
        debug_assert_eq!(r, numerical_rank(t.herm(), tol));
        let mut block_rows = vecs.adjoint();
        let mut right = vecs.clone();
        for (j, &l) in vals.iter().enumerate() {
            let s = libm::sqrt(l);
            for c in 0..d {
                block_rows[(j, c)] *= s;
                right[(c, j)] /= s;
            }
        }
        let b = psd_sqrt(&drivers[n]).matrix() * chain.roots[n].matrix();
        range_bases.push(&b * &right);
        rows.push(block_rows);
        blocks.push(Block { offset, size: r });
        offset += r;
    }
    let mut v = Matrix::zeros(offset, d);
    for (blk, r) in blocks.iter().zip(&rows) {
        v.set_block(blk.offset, 0, r);
    }
    Ok(NaimarkDilation {
        h_dim: d,
        k_dim: offset,
        v,
        blocks,
        range_bases,
        drivers: drivers.to_vec(),
        chain,
        tol: *tol,
    })
}

impl NaimarkDilation {
    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn chain(&self) -> &ResidualChain {
        &self.chain
    }

    pub fn drivers(&self) -> &[Effect] {
        &self.drivers
    }

    pub fn range_basis(&self, n: usize) -> &Matrix {
        &self.range_bases[n - 1]
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// First row of the tail `Q_n K`; `Q_0 = I`.
    fn tail_start(&self, n: usize) -> usize {
        if n == 0 {
            0
        } else {
            self.blocks[n - 1].end()
        }
    }

    /// `P_n · m` for `1 ≤ n ≤ N`.
    pub fn mask_block(&self, n: usize, m: &Matrix) -> Matrix {
        let b = self.blocks[n - 1];
        m.mask_rows(b.offset..b.end())
    }

    /// `P_{[n,m]} · x`.
    pub fn mask_range(&self, n: usize, m: usize, x: &Matrix) -> Matrix {
        x.mask_rows(self.blocks[n - 1].offset..self.blocks[m - 1].end())
    }

    /// `Q_n · m` for `0 ≤ n ≤ N`.
    pub fn mask_tail(&self, n: usize, m: &Matrix) -> Matrix {
        m.mask_rows(self.tail_start(n)..self.k_dim)
    }

    /// `Q_n K` as a coordinate subspace of `K`.
    pub fn tail_coordinates(&self, n: usize) -> Subspace {
        Subspace::coordinate(self.k_dim, self.tail_start(n)..self.k_dim)
    }

    fn check_index(&self, n: usize, min: usize) -> Result<()> {
        if n < min || n > self.n_blocks() {
            return Err(Error::IndexOutOfRange { index: n, max: self.n_blocks() });
        }
        Ok(())
    }

    pub fn residuals(&self) -> DilationResiduals {
        let d = self.h_dim;
        let isometry = self.v.adjoint_mul(&self.v).distance(&Matrix::identity(d));
        let mut extraction: f64 = 0.0;
        let mut tail: f64 = 0.0;
        let mut factorization: f64 = 0.0;
        for n in 0..=self.n_blocks() {
            let q = self.mask_tail(n, &self.v);
            tail = tail.max(q.adjoint_mul(&q).distance(self.chain.residuals[n].matrix()));
            if n == 0 {
                continue;
            }
            let p = self.mask_block(n, &self.v);
            extraction = extraction.max(p.adjoint_mul(&p).distance(self.chain.extracted[n - 1].matrix()));
            let blk = self.blocks[n - 1];
            let vn = self.v.select_rows(blk.offset..blk.end());
            // `ker B_n = ker T_n`; compare on the numerical support so the
            // square root of roundoff-level eigenvalues stays out of the residual.
            let b = psd_sqrt(&self.drivers[n - 1]).matrix() * self.chain.roots[n - 1].matrix();
            let eig = self.chain.extracted[n - 1].herm().eigen();
            let thr = self.tol.rank_threshold(eig.spectral_radius());
            let support = eig.reassemble(|l| if l.abs() > thr { 1.0 } else { 0.0 });
            factorization = factorization.max((&self.range_bases[n - 1] * &vn).distance(&(&b * &support)));
        }
        DilationResiduals { isometry, extraction, tail, factorization }
    }

    /// `Σ_n rank(B_n)` recomputed from the extracted effects.
    pub fn rank_sum(&self) -> usize {
        self.chain.extracted.iter().map(|t| numerical_rank(t.herm(), &self.tol)).sum()
    }

    /// `M_n`, the closed span of `Q_n V H`.
    pub fn tail_subspace(&self, n: usize) -> Result<Subspace> {
        self.check_index(n, 0)?;
        Ok(Subspace::span_of(&self.mask_tail(n, &self.v), &self.tol))
    }

    /// Compression of `P_n` to `M_{n-1}` and the rank identity
    /// `dim M_n − dim(M_{n-1} ∩ Q_n K) = rank(C_n − C_n²)`.
    pub fn compression_defect(&self, n: usize) -> Result<CompressionReport> {
        self.check_index(n, 1)?;
        Ok(self.block_compression(n, n)?.0)
    }

    /// Block version over `P_{[n,m]}` together with the split of the defect
    /// into one-coordinate terms and the off-diagonal interaction.
    pub fn block_compression(&self, n: usize, m: usize) -> Result<(CompressionReport, BlockDecomposition)> {
        self.check_index(n, 1)?;
        self.check_index(m, n)?;
        let start = self.tail_subspace(n - 1)?;
        block_compression_on(&start, &self.blocks, n, m, &self.tol)
    }

    /// The isometry `U_{n-1}` with `U R_{n-1}^{1/2} h = Q_{n-1} V h`, as a
    /// `D × d` matrix vanishing on `ker R_{n-1}`, and the checks it satisfies.
    pub fn residual_isometry(&self, chain: &ResidualChain, n: usize) -> Result<(Matrix, IsometryReport)> {
        self.check_index(n, 1)?;
        if chain.len() != self.n_blocks() || chain.dim() != self.h_dim {
            return Err(Error::DimensionMismatch { expected: self.n_blocks(), found: chain.len() });
        }
        let drift = chain
            .extracted
            .iter()
            .zip(&self.chain.extracted)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max);
        if drift > self.tol.check_tol {
            return Err(Error::CrossCheckFailed(format!(
                "chain and dilation come from different drivers (extracted effects differ by {drift:e})"
            )));
        }
        let d = self.h_dim;
        let residual = &chain.residuals[n - 1];
        let root = &chain.roots[n - 1];
        let (vals, s) = support_basis(residual.herm(), &self.tol)?;
        let tail_v = self.mask_tail(n - 1, &self.v);
        let mut u_coords = &tail_v * &s;
        for (j, &l) in vals.iter().enumerate() {
            let f = 1.0 / libm::sqrt(l);
            for i in 0..self.k_dim {
                u_coords[(i, j)] *= f;
            }
        }
        let u = &u_coords * &s.adjoint();

        let isometry = u_coords.adjoint_mul(&u_coords).distance(&Matrix::identity(s.cols()));
        let intertwining = (&u * root.matrix()).distance(&tail_v);

        let a = &self.drivers[n - 1];
        let pu = self.mask_block(n, &u_coords);
        let qu = self.mask_tail(n, &u_coords);
        let driver_block = u_coords.adjoint_mul(&pu).distance(&s.adjoint_mul(&(a.matrix() * &s)));
        let complement_block =
            u_coords.adjoint_mul(&qu).distance(&s.adjoint_mul(&(a.complement().matrix() * &s)));

        let pu_full = self.mask_block(n, &u);
        let qu_full = self.mask_tail(n, &u);
        let rebuild = |x: &Matrix| &(root.matrix() * &u.adjoint_mul(x)) * root.matrix();
        let t_rebuild = rebuild(&pu_full).distance(chain.extracted[n - 1].matrix());
        let r_rebuild = rebuild(&qu_full).distance(chain.residuals[n].matrix());

        if isometry > self.tol.check_tol.max(1e-10) {
            return Err(Error::IsometryViolation { residual: isometry });
        }
        let report = IsometryReport {
            n,
            support_dim: s.cols(),
            kernel_dim: d - s.cols(),
            isometry,
            intertwining,
            driver_block,
            complement_block,
            t_rebuild,
            r_rebuild,
        };
        Ok((u, report))
    }
}

/// Compression of the block projection `P_{[n,m]}` to a subspace `start`
/// of `Q_{n-1}K`, for any partition of the ambient space into row blocks.
///
/// `M_m` is taken as the span of `Q_m · start`; inside a dilation with
/// `start = M_{n-1}` that is the tail subspace `M_m`.
pub fn block_compression_on(
    start: &Subspace,
    blocks: &[Block],
    n: usize,
    m: usize,
    tol: &Tolerances,
) -> Result<(CompressionReport, BlockDecomposition)> {
    if n < 1 || m < n || m > blocks.len() {
        return Err(Error::IndexOutOfRange { index: m.max(n), max: blocks.len() });
    }
    let k_dim = blocks.last().map_or(0, |b| b.end());
    if start.ambient_dim() != k_dim {
        return Err(Error::DimensionMismatch { expected: k_dim, found: start.ambient_dim() });
    }
    let y = start.basis();
    let r = start.dim();
    let block_mask = |j: usize, x: &Matrix| x.mask_rows(blocks[j - 1].offset..blocks[j - 1].end());
    let tail_from = blocks[m - 1].end();

    let py = y.mask_rows(blocks[n - 1].offset..tail_from);
    let c = HermMatrix::from_computed(&y.adjoint_mul(&py));
    let defect = c.sub(&HermMatrix::from_computed(&(c.matrix() * c.matrix())));
    let defect_rank = numerical_rank(&defect, tol);
    let defect_min = defect.eigen().min();

    let next = Subspace::span_of(&y.mask_rows(tail_from..k_dim), tol);
    let meet = intersect(start, &Subspace::coordinate(k_dim, tail_from..k_dim), tol)?;
    let update_gap = next.projection().distance(&meet.projection());

    // E P_i (I − E) P_j |_M, assembled from the masks without shortcuts.
    let z: Vec<Matrix> = (n..=m).map(|j| block_mask(j, y)).collect();
    let escaped: Vec<Matrix> = z.iter().map(|zj| zj - &(y * &y.adjoint_mul(zj))).collect();
    let mut diagonal_terms = Vec::with_capacity(z.len());
    let mut offdiag = Matrix::zeros(r, r);
    for (i, zi) in z.iter().enumerate() {
        for (j, ej) in escaped.iter().enumerate() {
            let term = zi.adjoint_mul(ej);
            if i == j {
                diagonal_terms.push(HermMatrix::from_computed(&term));
            } else {
                offdiag = &offdiag + &term;
            }
        }
    }
    let offdiag = HermMatrix::from_computed(&offdiag);
    let recombined = HermMatrix::sum(r, diagonal_terms.iter()).add(&offdiag);
    let decomposition_residual = recombined.distance(&defect);
    let offdiag_norm = offdiag.frobenius_norm();

    let report = CompressionReport {
        n,
        m,
        c,
        defect,
        defect_rank,
        defect_min_eigenvalue: defect_min,
        dim_m_prev: r,
        dim_m_next: next.dim(),
        dim_intersection: meet.dim(),
        update_gap,
    };
    let quotient = report.quotient_dim();
    if quotient != defect_rank as isize {
        return Err(Error::RankIdentityViolation { step: m, quotient_dim: quotient, defect_rank });
    }
    let additive_rank = if offdiag_norm <= tol.check_tol {
        let sum = HermMatrix::sum(r, diagonal_terms.iter());
        let rank = numerical_rank(&sum, tol);
        if rank as isize != quotient {
            return Err(Error::RankIdentityViolation { step: m, quotient_dim: quotient, defect_rank: rank });
        }
        Some(rank)
    } else {
        None
    };
    let decomposition = BlockDecomposition { diagonal_terms, offdiag, offdiag_norm, decomposition_residual, additive_rank };
    Ok((report, decomposition))
}

#[derive(Clone, Debug)]
pub struct CompressionReport {
    pub n: usize,
    pub m: usize,
    /// Compression of `P_{[n,m]}` to `M_{n-1}` in its orthonormal basis.
    pub c: HermMatrix,
    /// `c − c²`.
    pub defect: HermMatrix,
    pub defect_rank: usize,
    pub defect_min_eigenvalue: f64,
    pub dim_m_prev: usize,
    pub dim_m_next: usize,
    pub dim_intersection: usize,
    /// `‖proj(M_m) − proj(M_{n-1} ∩ Q_m K)‖_F`: zero exactly when the tail
    /// update is an intersection.
    pub update_gap: f64,
}

impl CompressionReport {
    pub fn quotient_dim(&self) -> isize {
        self.dim_m_next as isize - self.dim_intersection as isize
    }
}

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// `E P_j (I − E) P_j |_M` for `j = n..=m`.
    pub diagonal_terms: Vec<HermMatrix>,
    /// The interaction `Σ_{i≠j} E P_i (I − E) P_j |_M`.
    pub offdiag: HermMatrix,
    pub offdiag_norm: f64,
    /// `‖Σ diagonal_terms + offdiag − defect‖_F`.
    pub decomposition_residual: f64,
    /// `rank(Σ diagonal_terms)`, recorded when the interaction vanishes.
    pub additive_rank: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryReport {
    pub n: usize,
    pub support_dim: usize,
    pub kernel_dim: usize,
    /// `‖UᴴU − I‖` on the support of `R_{n-1}`.
    pub isometry: f64,
    /// `‖U R_{n-1}^{1/2} − Q_{n-1} V‖`.
    pub intertwining: f64,
    /// `‖UᴴP_nU − S A_n S‖` in support coordinates.
    pub driver_block: f64,
    /// `‖UᴴQ_nU − S (I − A_n) S‖`.
    pub complement_block: f64,
    /// `‖R^{1/2}UᴴP_nUR^{1/2} − T_n‖`.
    pub t_rebuild: f64,
    /// `‖R^{1/2}UᴴQ_nUR^{1/2} − R_n‖`.
    pub r_rebuild: f64,
}

impl IsometryReport {
    pub fn max(&self) -> f64 {
        [self.isometry, self.intertwining, self.driver_block, self.complement_block, self.t_rebuild, self.r_rebuild]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> Effect {
        Effect::from_real_diag(&[x]).unwrap()
    }

    fn scalar_dilation() -> NaimarkDilation {
        build_dilation(&[scalar(0.5), scalar(0.5), scalar(1.0)], &Tolerances::default()).unwrap()
    }

    #[test]
    fn scalar_dilation_column() {
        let dil = scalar_dilation();
        assert_eq!(dil.k_dim(), 3);
        let want = [libm::sqrt(0.5), 0.5, 0.5];
        for (i, w) in want.iter().enumerate() {
            assert!((dil.v()[(i, 0)].re - w).abs() < 1e-15);
        }
        assert!(dil.residuals().max() < 1e-15);
    }

    #[test]
    fn scalar_tail_and_defect() {
        let dil = scalar_dilation();
        let m1 = dil.tail_subspace(1).unwrap();
        assert_eq!(m1.dim(), 1);
        let h = libm::sqrt(0.5);
        assert!((m1.basis()[(1, 0)].re - h).abs() < 1e-15 && (m1.basis()[(2, 0)].re - h).abs() < 1e-15);
        let rep = dil.compression_defect(1).unwrap();
        assert!((rep.c.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!(rep.defect_rank, 1);
        assert!(matches!(dil.tail_subspace(4), Err(Error::IndexOutOfRange { index: 4, max: 3 })));
        assert!(matches!(dil.compression_defect(0), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn scalar_residual_isometry() {
        let dil = scalar_dilation();
        let (u, rep) = dil.residual_isometry(dil.chain(), 2).unwrap();
        let h = libm::sqrt(0.5);
        assert!(u[(0, 0)].norm() < 1e-15);
        assert!((u[(1, 0)].re - h).abs() < 1e-15 && (u[(2, 0)].re - h).abs() < 1e-15);
        assert!(rep.max() < 1e-14);
        let (u1, _) = dil.residual_isometry(dil.chain(), 1).unwrap();
        assert!(u1.distance(dil.v()) < 1e-15);
    }

    #[test]
    fn pvm_dilation_is_sharp() {
        let tol = Tolerances::default();
        let p: Vec<Effect> = (0..3)
            .map(|k| {
                let mut d = [0.0; 3];
                d[k] = 1.0;
                Effect::from_real_diag(&d).unwrap()
            })
            .collect();
        let dil = build_dilation(&p, &tol).unwrap();
        assert_eq!(dil.k_dim(), 3);
        for n in 1..=3 {
            let rep = dil.compression_defect(n).unwrap();
            assert_eq!(rep.defect_rank, 0);
            assert_eq!(rep.dim_m_next, rep.dim_intersection);
            assert!(rep.update_gap < 1e-12);
            assert_eq!(dil.tail_subspace(n).unwrap().dim(), 3 - n);
        }
    }

    #[test]
    fn full_block_compression_is_identity() {
        let dil = scalar_dilation();
        let (rep, dec) = dil.block_compression(1, 3).unwrap();
        assert!(rep.c.distance(&HermMatrix::identity(1)) < 1e-15);
        assert_eq!(rep.defect_rank, 0);
        assert!(dec.decomposition_residual < 1e-15);
        let (single, dec1) = dil.block_compression(2, 2).unwrap();
        assert_eq!(single.defect_rank, dil.compression_defect(2).unwrap().defect_rank);
        assert_eq!(dec1.offdiag_norm, 0.0);
    }

    #[test]
    fn diagonal_line_against_coordinate_projections() {
        let h = libm::sqrt(0.5);
        let line = Subspace::from_orthonormal(Matrix::from_real_rows(&[&[h], &[h]])).unwrap();
        let blocks = [Block { offset: 0, size: 1 }, Block { offset: 1, size: 1 }];
        let (rep, _) = block_compression_on(&line, &blocks, 1, 1, &Tolerances::default()).unwrap();
        assert!((rep.c.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert_eq!((rep.defect_rank, rep.dim_intersection, rep.dim_m_next), (1, 0, 1));
    }

    #[test]
    fn residual_chain_must_be_exhaustive() {
        let tol = Tolerances::default();
        assert!(matches!(build_dilation(&[scalar(0.5)], &tol), Err(Error::ChainNotExhaustive { .. })));
    }
}
