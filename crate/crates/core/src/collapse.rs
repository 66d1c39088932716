//! The collapse map `A ↦ (P_{k-1} A_k P_{k-1})_k`, collapsed POVMs, and the
//! range and fiber constructions over them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eigen, kernel_projection, psd_pinv_sqrt, support_basis, support_projection, Effect, HermMatrix, Matrix,
};
use crate::povm::{normalization_residual, Label, OrderedPovm};
use crate::tol::Tolerances;

/// A POVM `(B_1, …, B_N, B_esc)` with its support projections `S_k`, kernel
/// filtration `E_0 = H ⊇ E_1 ⊇ …` (`E_k = ker Σ_{j≤k} S_j`) and leftovers
/// `L_k = S_k − B_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedPovm {
    dim: usize,
    b: Vec<Effect>,
    b_esc: Effect,
    supports: Vec<HermMatrix>,
    filtration: Vec<HermMatrix>,
    leftovers: Vec<HermMatrix>,
}

/// Diagnostics for the collapsed-POVM predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedCheck {
    pub collapsed: bool,
    pub normalization_residual: f64,
    /// Worst `‖B_iB_j‖_F` over `i < j`, with the pair (1-based).
    pub worst_pair: Option<(usize, usize, f64)>,
    /// `‖Σ S_k − I‖_F`, summed over the nonzero coordinates.
    pub support_defect: f64,
    /// `max_k ‖B_k B_esc − (B_k − B_k²)‖_F`.
    pub escape_identity: f64,
    /// Largest commutator norm among `{B_k, B_esc}`.
    pub max_commutator: f64,
}

impl CollapsedPovm {
    /// Validated constructor: the result must pass [`is_collapsed`].
    pub fn new(b: Vec<Effect>, b_esc: Effect, tol: &Tolerances) -> Result<Self> {
        let c = Self::assemble(b, b_esc, tol)?;
        let check = c.check(tol)?;
        if !check.collapsed {
            return Err(Error::NotCollapsed(describe(&check, tol)));
        }
        Ok(c)
    }

    /// Computes supports, filtration and leftovers without judging the result.
    pub(crate) fn assemble(b: Vec<Effect>, b_esc: Effect, tol: &Tolerances) -> Result<Self> {
        let dim = b_esc.dim();
        for e in &b {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
            }
        }
        let supports: Vec<HermMatrix> =
            b.iter().map(|e| support_projection(e.herm(), tol)).collect::<Result<_>>()?;
        let mut filtration = Vec::with_capacity(b.len() + 1);
        filtration.push(HermMatrix::identity(dim));
        let mut acc = HermMatrix::zeros(dim);
        for s in &supports {
            acc = acc.add(s);
            filtration.push(kernel_projection(&acc, tol)?);
        }
        let leftovers = supports.iter().zip(&b).map(|(s, e)| s.sub(e.herm())).collect();
        Ok(Self { dim, b, b_esc, supports, filtration, leftovers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn b(&self) -> &[Effect] {
        &self.b
    }

    pub fn b_esc(&self) -> &Effect {
        &self.b_esc
    }

    pub fn supports(&self) -> &[HermMatrix] {
        &self.supports
    }

    /// Projection onto `E_k`, `0 ≤ k ≤ N`; beyond `N` the filtration is constant.
    pub fn filtration(&self, k: usize) -> &HermMatrix {
        &self.filtration[k.min(self.b.len())]
    }

    pub fn leftovers(&self) -> &[HermMatrix] {
        &self.leftovers
    }

    /// `B_k` for `k ≥ 1`, zero past the end.
    pub fn coordinate(&self, k: usize) -> Effect {
        self.b.get(k - 1).cloned().unwrap_or_else(|| Effect::zeros(self.dim))
    }

    /// The collapsed-POVM predicate with diagnostics.
    pub fn check(&self, tol: &Tolerances) -> Result<CollapsedCheck> {
        is_collapsed(&self.b, &self.b_esc, tol)
    }

    /// Non-escape coordinates as originals, the escape as terminal step 1.
    pub fn to_ordered(&self, tol: &Tolerances) -> Result<OrderedPovm> {
        let mut effects = self.b.clone();
        effects.push(self.b_esc.clone());
        let mut labels: Vec<Label> = (1..=self.b.len()).map(Label::Original).collect();
        labels.push(Label::Terminal(1));
        OrderedPovm::new(effects, labels, tol)
    }

    /// Coordinatewise Frobenius distance, padding the shorter list with zeros.
    pub fn distance(&self, other: &CollapsedPovm) -> f64 {
        let n = self.len().max(other.len());
        let mut worst = self.b_esc.distance(&other.b_esc);
        for k in 1..=n {
            worst = worst.max(self.coordinate(k).distance(&other.coordinate(k)));
        }
        worst
    }
}

fn describe(c: &CollapsedCheck, tol: &Tolerances) -> String {
    let mut parts = Vec::new();
    if let Some((i, j, v)) = c.worst_pair {
        if v > tol.check_tol {
            parts.push(format!("B_{i}B_{j} has norm {v:e}"));
        }
    }
    if c.support_defect > tol.check_tol {
        parts.push(format!("supports miss the identity by {:e}", c.support_defect));
    }
    if parts.is_empty() {
        parts.push(String::from("collapsed"));
    }
    parts.join("; ")
}

/// Tests `B_iB_j = 0` (`i ≠ j`) and `Σ S_k = I` for a candidate with a
/// designated escape coordinate.
pub fn is_collapsed(b: &[Effect], b_esc: &Effect, tol: &Tolerances) -> Result<CollapsedCheck> {
    let dim = b_esc.dim();
    let mut all: Vec<Effect> = b.to_vec();
    all.push(b_esc.clone());
    for e in &all {
        if e.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
        }
    }
    let normalization = normalization_residual(dim, &all);
    if !(normalization <= tol.check_tol) {
        return Err(Error::NotNormalized { residual: normalization });
    }
    let mut worst_pair: Option<(usize, usize, f64)> = None;
    for i in 0..b.len() {
        for j in (i + 1)..b.len() {
            let v = (b[i].matrix() * b[j].matrix()).frobenius_norm();
            if worst_pair.is_none_or(|(_, _, w)| v > w) {
                worst_pair = Some((i + 1, j + 1, v));
            }
        }
    }
    let mut support_sum = HermMatrix::zeros(dim);
    for e in b.iter().filter(|e| !e.is_zero(0.0)) {
        support_sum = support_sum.add(&support_projection(e.herm(), tol)?);
    }
    let support_defect = support_sum.distance(&HermMatrix::identity(dim));

    let esc = b_esc.matrix();
    let mut escape_identity: f64 = 0.0;
    for e in b {
        let m = e.matrix();
        let lhs = m * esc;
        let rhs = m - &(m * m);
        escape_identity = escape_identity.max(lhs.distance(&rhs));
    }
    let mut max_commutator: f64 = 0.0;
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            max_commutator = max_commutator.max(crate::linalg::commutator_norm(all[i].matrix(), all[j].matrix()));
        }
    }
    let orthogonal = worst_pair.is_none_or(|(_, _, v)| v <= tol.check_tol);
    Ok(CollapsedCheck {
        collapsed: orthogonal && support_defect <= tol.check_tol,
        normalization_residual: normalization,
        worst_pair,
        support_defect,
        escape_identity,
        max_commutator,
    })
}

/// `B_k = P_{k-1} A_k P_{k-1}` with `P_{k-1}` the projection onto the joint
/// kernel of `A_1, …, A_{k-1}`, plus the projections `P_0, …, P_N`.
pub(crate) fn collapse_coordinates(
    dim: usize,
    originals: &[Effect],
    tol: &Tolerances,
) -> Result<(Vec<Effect>, Vec<HermMatrix>)> {
    let mut kernels = Vec::with_capacity(originals.len() + 1);
    let mut b = Vec::with_capacity(originals.len());
    let mut p = HermMatrix::identity(dim);
    let mut acc = HermMatrix::zeros(dim);
    for a in originals {
        b.push(Effect::from_computed(&(&(p.matrix() * a.matrix()) * p.matrix()))?);
        kernels.push(p);
        acc = acc.add(a.herm());
        p = kernel_projection(&acc, tol)?;
    }
    kernels.push(p);
    Ok((b, kernels))
}

/// The collapse map. Only original coordinates enter the `B_k`; terminal
/// mass ends up in `B_esc = I − Σ B_k`.
pub fn collapse_map(p: &OrderedPovm, tol: &Tolerances) -> Result<CollapsedPovm> {
    let dim = p.dim();
    let residual = p.normalization_residual();
    if !(residual <= tol.check_tol) {
        return Err(Error::NotNormalized { residual });
    }
    let (b, kernels) = collapse_coordinates(dim, p.originals(), tol)?;
    let mut esc = Matrix::identity(dim);
    for e in &b {
        esc = &esc - e.matrix();
    }
    let b_esc = Effect::from_computed(&esc).map_err(|e| {
        Error::CollapseInvariantViolation(format!("escape coordinate is not an effect: {e}"))
    })?;
    let out = CollapsedPovm::assemble(b, b_esc, tol)?;
    let check = out.check(tol)?;
    if let Some((i, j, v)) = check.worst_pair {
        if v > tol.check_tol {
            return Err(Error::CollapseInvariantViolation(format!("B_{i}B_{j} has norm {v:e}")));
        }
    }
    // The support condition is a theorem only when the originals have no
    // common kernel vector, i.e. when they alone sum to the identity.
    let common_kernel = kernels.last().expect("nonempty").frobenius_norm();
    if common_kernel <= tol.check_tol && check.support_defect > tol.check_tol {
        return Err(Error::CollapseInvariantViolation(format!(
            "supports miss the identity by {:e}",
            check.support_defect
        )));
    }
    Ok(out)
}

/// `A_1 = B_1`, `A_k = B_k + L_{k-1}`, closed by a final `L_N` when it is
/// nonzero so the originals alone sum to the identity.
pub fn canonical_preimage(b: &CollapsedPovm, tol: &Tolerances) -> Result<OrderedPovm> {
    let check = b.check(tol)?;
    if !check.collapsed {
        return Err(Error::NotCollapsed(describe(&check, tol)));
    }
    if b.is_empty() {
        return Err(Error::NotCollapsed(String::from("no non-escape coordinates")));
    }
    let mut effects = Vec::with_capacity(b.len() + 1);
    effects.push(b.b[0].clone());
    for k in 1..b.len() {
        let m = b.b[k].matrix() + b.leftovers[k - 1].matrix();
        effects.push(Effect::from_computed(&m)?);
    }
    let last = b.leftovers.last().expect("nonempty");
    if last.frobenius_norm() > tol.check_tol {
        effects.push(Effect::from_computed(last.matrix())?);
    }
    OrderedPovm::from_originals(effects, tol)
}

/// Per-level comparison of a POVM against a collapsed target.
#[derive(Clone, Debug)]
pub struct FiberReport {
    pub member: bool,
    /// `‖P_{∩_{j<k} ker A_j} − P_{E_{k-1}}‖_F` for `k = 1..=levels`.
    pub kernel_gaps: Vec<f64>,
    /// `‖P_{E_{k-1}} A_k P_{E_{k-1}} − B_k‖_F`.
    pub compression_gaps: Vec<f64>,
    /// Result of comparing `collapse_map(p)` with `b` directly.
    pub collapse_agrees: bool,
    pub collapse_distance: f64,
}

impl FiberReport {
    pub fn max_gap(&self) -> f64 {
        self.kernel_gaps.iter().chain(&self.compression_gaps).fold(0.0_f64, |a, &b| a.max(b))
    }
}

/// Checks the kernel-filtration and compression conditions level by level.
pub fn fiber_membership(p: &OrderedPovm, b: &CollapsedPovm, tol: &Tolerances) -> Result<FiberReport> {
    fiber_membership_of(p.originals(), b, tol)
}

/// [`fiber_membership`] on a bare list of original coordinates, which need
/// not be normalized.
pub fn fiber_membership_of(originals: &[Effect], b: &CollapsedPovm, tol: &Tolerances) -> Result<FiberReport> {
    let dim = b.dim();
    for a in originals {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: a.dim() });
        }
    }
    let levels = originals.len().max(b.len());
    let mut padded = originals.to_vec();
    padded.resize(levels, Effect::zeros(dim));
    let (collapsed, kernels) = collapse_coordinates(dim, &padded, tol)?;

    let mut kernel_gaps = Vec::with_capacity(levels);
    let mut compression_gaps = Vec::with_capacity(levels);
    for k in 1..=levels {
        let e = b.filtration(k - 1);
        kernel_gaps.push(kernels[k - 1].distance(e));
        let compressed = &(e.matrix() * padded[k - 1].matrix()) * e.matrix();
        compression_gaps.push(compressed.distance(b.coordinate(k).matrix()));
    }
    let member = kernel_gaps.iter().chain(&compression_gaps).all(|&g| g <= tol.check_tol);

    let mut esc = Matrix::identity(dim);
    for e in &collapsed {
        esc = &esc - e.matrix();
    }
    let mut collapse_distance = esc.distance(b.b_esc().matrix());
    for (k, e) in collapsed.iter().enumerate() {
        collapse_distance = collapse_distance.max(e.distance(&b.coordinate(k + 1)));
    }
    let collapse_agrees = collapse_distance <= tol.check_tol;
    Ok(FiberReport { member, kernel_gaps, compression_gaps, collapse_agrees, collapse_distance })
}

/// Off-diagonal data for a coupled fiber member, in the coordinates of the
/// sector bases returned by [`sector_basis`]: `c_block` acts on `S_1H`,
/// `x_block` maps `S_1H → S_2H`.
#[derive(Clone, Debug)]
pub struct CouplingSpec {
    pub c_block: Matrix,
    pub x_block: Matrix,
}

/// Orthonormal eigenbasis of `S_kH`, phase-fixed so each column's largest
/// entry is real and positive.
pub fn sector_basis(b: &CollapsedPovm, k: usize, tol: &Tolerances) -> Result<Matrix> {
    if k == 0 || k > b.len() {
        return Err(Error::IndexOutOfRange { index: k, max: b.len() });
    }
    Ok(support_basis(b.b[k - 1].herm(), tol)?.1)
}

struct Sectors {
    w1: Matrix,
    w2: Matrix,
    l1: Matrix,
    b2: Matrix,
    l2: Matrix,
}

fn sectors(b: &CollapsedPovm, tol: &Tolerances) -> Result<Sectors> {
    let check = b.check(tol)?;
    if !check.collapsed {
        return Err(Error::NotCollapsed(describe(&check, tol)));
    }
    if b.len() < 3 {
        return Err(Error::NotCollapsed(format!(
            "coupling needs three non-escape coordinates, found {}",
            b.len()
        )));
    }
    let w1 = sector_basis(b, 1, tol)?;
    let w2 = sector_basis(b, 2, tol)?;
    let within = |w: &Matrix, m: &Matrix| w.adjoint_mul(&(m * w));
    Ok(Sectors {
        l1: within(&w1, b.leftovers[0].matrix()),
        b2: within(&w2, b.b[1].matrix()),
        l2: within(&w2, b.leftovers[1].matrix()),
        w1,
        w2,
    })
}

fn block2(c: &Matrix, x: &Matrix, b: &Matrix) -> Matrix {
    let (r1, r2) = (c.rows(), b.rows());
    let mut m = Matrix::zeros(r1 + r2, r1 + r2);
    m.set_block(0, 0, c);
    m.set_block(0, r1, &x.adjoint());
    m.set_block(r1, 0, x);
    m.set_block(r1, r1, b);
    m
}

fn check_coupling_shapes(s: &Sectors, c: &Matrix, x: &Matrix) -> Result<()> {
    let (r1, r2) = (s.w1.cols(), s.w2.cols());
    if c.rows() != r1 || c.cols() != r1 {
        return Err(Error::DimensionMismatch { expected: r1, found: c.rows().max(c.cols()) });
    }
    if x.rows() != r2 || x.cols() != r1 {
        return Err(Error::DimensionMismatch { expected: r2, found: x.rows() });
    }
    HermMatrix::new(c.clone())?;
    Ok(())
}

/// Builds the fiber member with `A_2 = [[C, Xᴴ], [X, B_2]]` on `S_1H ⊕ S_2H`
/// and `A_3 = B_3 + [[L_1 − C, −Xᴴ], [−X, L_2]]`; later coordinates follow
/// the canonical preimage.
pub fn couple_fiber(b: &CollapsedPovm, spec: &CouplingSpec, tol: &Tolerances) -> Result<OrderedPovm> {
    let s = sectors(b, tol)?;
    check_coupling_shapes(&s, &spec.c_block, &spec.x_block)?;
    let first = block2(&spec.c_block, &spec.x_block, &s.b2);
    let second = block2(&(&s.l1 - &spec.c_block), &spec.x_block.scale(-1.0), &s.l2);
    let min_eigenvalue = herm_eigen(&first).min().min(herm_eigen(&second).min());
    if min_eigenvalue < -tol.check_tol {
        return Err(Error::InfeasibleCoupling { min_eigenvalue });
    }
    let mut w = Matrix::zeros(b.dim(), s.w1.cols() + s.w2.cols());
    w.set_block(0, 0, &s.w1);
    w.set_block(0, s.w1.cols(), &s.w2);
    let embed = |m: &Matrix| &(&w * m) * &w.adjoint();

    let mut effects = Vec::with_capacity(b.len() + 1);
    effects.push(b.b[0].clone());
    effects.push(Effect::from_computed(&embed(&first))?);
    effects.push(Effect::from_computed(&(b.b[2].matrix() + &embed(&second)))?);
    for k in 3..b.len() {
        effects.push(Effect::from_computed(&(b.b[k].matrix() + b.leftovers[k - 1].matrix()))?);
    }
    let last = b.leftovers.last().expect("nonempty");
    if last.frobenius_norm() > tol.check_tol {
        effects.push(Effect::from_computed(last.matrix())?);
    }
    let p = OrderedPovm::from_originals(effects, tol)?;
    let fiber = fiber_membership(&p, b, tol)?;
    if !fiber.member {
        return Err(Error::CrossCheckFailed(format!(
            "coupled POVM left the fiber (largest gap {:e})",
            fiber.max_gap()
        )));
    }
    Ok(p)
}

/// Relative slack on the normalized block spectrum in [`max_coupling`].
const COUPLING_SLACK: f64 = 1e-12;
/// Absolute width at which the bisection stops.
pub const COUPLING_PRECISION: f64 = 1e-10;

/// Largest `σ ≥ 0` for which `(c_block, σ X₀)` satisfies the positivity
/// hypotheses of [`couple_fiber`], with `X₀` scaled to unit Frobenius norm.
///
/// Each block `[[P, Yᴴ], [Y, Q]]` is tested in the normalized form
/// `[[Π_P, Kᴴ], [K, Π_Q]]`, `K = Q^{+1/2} Y P^{+1/2}`, after requiring `Y` to
/// live on the supports of `P` and `Q`. The normalized minimum eigenvalue is
/// bisected on; it is insensitive to how small `P` and `Q` are.
pub fn max_coupling(b: &CollapsedPovm, direction: &Matrix, c_block: &Matrix, tol: &Tolerances) -> Result<f64> {
    let s = sectors(b, tol)?;
    check_coupling_shapes(&s, c_block, direction)?;
    let norm = direction.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Empty("coupling direction must be nonzero"));
    }
    let x0 = direction.scale(1.0 / norm);
    let lc = &s.l1 - c_block;
    for m in [c_block, &lc] {
        let min_eigenvalue = herm_eigen(m).min();
        if min_eigenvalue < -tol.check_tol {
            return Err(Error::InfeasibleCoupling { min_eigenvalue });
        }
    }
    let first = NormalizedBlock::new(c_block, &x0, &s.b2, tol)?;
    let second = NormalizedBlock::new(&lc, &x0.scale(-1.0), &s.l2, tol)?;
    let feasible = |sigma: f64| first.feasible(sigma) && second.feasible(sigma);

    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while feasible(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    while hi - lo > COUPLING_PRECISION {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

struct NormalizedBlock {
    diag: Matrix,
    k: Matrix,
    leaks: bool,
}

impl NormalizedBlock {
    fn new(p: &Matrix, y: &Matrix, q: &Matrix, tol: &Tolerances) -> Result<Self> {
        let hp = HermMatrix::from_computed(p);
        let hq = HermMatrix::from_computed(q);
        let pp = support_projection(&hp, tol)?;
        let pq = support_projection(&hq, tol)?;
        // Y must vanish on ker P and map into ran Q.
        let off_p = y - &(y * pp.matrix());
        let off_q = y - &(pq.matrix() * y);
        let leaks = off_p.frobenius_norm() > COUPLING_SLACK || off_q.frobenius_norm() > COUPLING_SLACK;
        let k = &(psd_pinv_sqrt(&hq, tol)?.matrix() * y) * psd_pinv_sqrt(&hp, tol)?.matrix();
        let r1 = p.rows();
        let mut diag = Matrix::zeros(r1 + q.rows(), r1 + q.rows());
        diag.set_block(0, 0, pp.matrix());
        diag.set_block(r1, r1, pq.matrix());
        Ok(Self { diag, k, leaks })
    }

    fn feasible(&self, sigma: f64) -> bool {
        if sigma == 0.0 {
            return true;
        }
        if self.leaks {
            return false;
        }
        let r1 = self.k.cols();
        let mut m = self.diag.clone();
        let ks = self.k.scale(sigma);
        m.set_block(r1, 0, &ks);
        m.set_block(0, r1, &ks.adjoint());
        herm_eigen(&m).min() >= -COUPLING_SLACK
    }
}
