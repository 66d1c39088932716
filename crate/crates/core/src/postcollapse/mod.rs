//! Dynamics after collapse. Once the originals are collapsed they stay put,
//! and only the escape effect `E` keeps moving: `Ψ^m` replaces it by the
//! list `p_{m,1}(E), …, p_{m,m+1}(E)` of universal polynomials, generated by
//! `p_{0,1} = t` and
//!
//! `p_{m+1,j} = t · Π_{ℓ<j} (1 − p_{m,ℓ}) · p_{m,j}`, `p_{m+1,m+2} = t · Π_{ℓ≤m+1} (1 − p_{m,ℓ})`.

mod modular;
mod poly;

use alloc::vec;
use alloc::vec::Vec;

pub use modular::{check_levels_mod_prime, ModularLevel, PRIME};
pub use poly::IntPoly;

use crate::collapse::CollapsedPovm;
use crate::error::{Error, Result};
use crate::linalg::{Effect, HermMatrix};
use crate::povm::OrderedPovm;
use crate::tol::Tolerances;
use crate::transform::psi_power;

/// Highest level expanded with exact coefficients. The top polynomial at
/// level `m` has degree `C_{m+1}` (Catalan) and its coefficients grow
/// quickly; level 8 is degree 4862, level 12 would be degree 742900.
pub const LEVEL_CAP: usize = 8;

/// Degrees of `p_{m,1}, …, p_{m,m+1}`.
pub fn degrees(m: usize) -> Vec<usize> {
    let mut deg = vec![1usize];
    for _ in 0..m {
        let mut next = Vec::with_capacity(deg.len() + 1);
        let mut acc = 0;
        for &d in &deg {
            acc += d;
            next.push(1 + acc);
        }
        next.push(1 + acc);
        deg = next;
    }
    deg
}

/// Exact family `p_{m,1}, …, p_{m,m+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFamily {
    level: usize,
    polys: Vec<IntPoly>,
}

impl PolyFamily {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn polys(&self) -> &[IntPoly] {
        &self.polys
    }

    /// `p_{m,j}`, 1-based.
    pub fn get(&self, j: usize) -> Option<&IntPoly> {
        j.checked_sub(1).and_then(|i| self.polys.get(i))
    }

    /// `Σ_j p_{m,j} − t`, which must be the zero polynomial.
    pub fn sum_defect(&self) -> IntPoly {
        let mut acc = IntPoly::zero();
        for p in &self.polys {
            acc = &acc + p;
        }
        &acc - &IntPoly::monomial(1)
    }

    /// Every polynomial is nonnegative at `t = i/100`, `i = 0..=100`,
    /// decided in exact arithmetic.
    pub fn nonnegative_on_grid(&self) -> bool {
        self.polys.iter().all(|p| (0..=100).all(|i| p.sign_at(i, 100) >= 0))
    }
}

/// The first `min(j_max, m + 1)` polynomials of level `m`. Index `j` at the
/// next level only reads indices `≤ j`, so a prefix can be carried to any
/// level without expanding the rest of the family.
pub fn prefix_family(m: usize, j_max: usize) -> Vec<IntPoly> {
    let t = IntPoly::monomial(1);
    let mut fam = vec![t.clone()];
    for level in 0..m {
        let mut next = Vec::with_capacity(fam.len() + 1);
        let mut prefix = IntPoly::one();
        for p in &fam {
            let pp = &prefix * p;
            next.push(pp.shift(1));
            prefix = &prefix - &pp;
        }
        if level + 2 <= j_max {
            next.push(prefix.shift(1));
        }
        next.truncate(j_max);
        fam = next;
    }
    fam.truncate(j_max);
    fam
}

pub fn poly_family(m: usize) -> Result<PolyFamily> {
    if m > LEVEL_CAP {
        return Err(Error::LevelTooLarge { level: m, cap: LEVEL_CAP });
    }
    let family = PolyFamily { level: m, polys: prefix_family(m, m + 1) };
    if !family.sum_defect().is_zero() {
        return Err(Error::CrossCheckFailed("escape polynomials do not sum to t".into()));
    }
    let closed = closed_forms(m);
    if family.polys[..closed.len()] != closed[..] {
        return Err(Error::CrossCheckFailed("escape polynomials disagree with their closed forms".into()));
    }
    Ok(family)
}

/// `t^{m+1}` and, for `m ≥ 1`, `t^m Π_{ℓ=1..m} (1 − t^ℓ)`, built as products.
pub fn closed_forms(m: usize) -> Vec<IntPoly> {
    let mut out = vec![IntPoly::monomial(m + 1)];
    if m >= 1 {
        let mut second = IntPoly::monomial(m);
        for l in 1..=m {
            second = &second * &(&IntPoly::one() - &IntPoly::monomial(l));
        }
        out.push(second);
    }
    out
}

/// `p_{m,1}(t), …, p_{m,m+1}(t)` in floating point, through the recursion
/// rather than the expanded coefficients (which cancel catastrophically).
pub fn scalar_values(m: usize, t: f64) -> Vec<f64> {
    let mut fam = vec![t];
    for _ in 0..m {
        let mut next = Vec::with_capacity(fam.len() + 1);
        let mut prefix = 1.0;
        for &p in &fam {
            next.push(t * prefix * p);
            prefix *= 1.0 - p;
        }
        next.push(t * prefix);
        fam = next;
    }
    fam
}

/// `p_{m,j}(e)` for every `j` at level `m`, by functional calculus.
pub fn eval_level(m: usize, e: &Effect, tol: &Tolerances) -> Result<Vec<Effect>> {
    let eig = e.herm().eigen();
    let values: Vec<Vec<f64>> = eig.values.iter().map(|&l| scalar_values(m, l.clamp(0.0, 1.0))).collect();
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut idx = 0;
        let mat = eig.reassemble(|_| {
            let v = values[idx][j];
            idx += 1;
            v
        });
        out.push(Effect::from_computed(&mat)?);
    }
    let sum = HermMatrix::sum(e.dim(), out.iter().map(|x| x.herm()));
    let residual = sum.distance(e.herm());
    if residual > tol.check_tol {
        return Err(Error::CrossCheckFailed(alloc::format!(
            "escape polynomials at level {m} lose mass ({residual:e})"
        )));
    }
    Ok(out)
}

pub fn eval_on_effect(f: &PolyFamily, e: &Effect, tol: &Tolerances) -> Result<Vec<Effect>> {
    eval_level(f.level, e, tol)
}

/// `Ψ^m(b)` computed generically and through the escape polynomials.
#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub level: usize,
    pub generic: OrderedPovm,
    pub polynomial: Vec<Effect>,
    pub max_distance: f64,
}

pub fn psi_on_collapsed_equivalence(b: &CollapsedPovm, m: usize, tol: &Tolerances) -> Result<EquivalenceReport> {
    let check = b.check(tol)?;
    if !check.collapsed {
        return Err(Error::NotCollapsed(alloc::format!("{check:?}")));
    }
    let family = poly_family(m)?;
    let generic = psi_power(&b.to_ordered(tol)?, m, tol)?;
    let mut polynomial = b.b().to_vec();
    polynomial.extend(eval_on_effect(&family, b.b_esc(), tol)?);
    if polynomial.len() != generic.len() {
        return Err(Error::CrossCheckFailed(alloc::format!(
            "paths produce {} and {} coordinates",
            generic.len(),
            polynomial.len()
        )));
    }
    let max_distance = generic
        .effects()
        .iter()
        .zip(&polynomial)
        .map(|(a, b)| a.distance(b))
        .fold(0.0, f64::max);
    Ok(EquivalenceReport { level: m, generic, polynomial, max_distance })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub level: usize,
    /// `‖p_{m,j}(e)‖` (operator norm).
    pub norm: f64,
    /// `ρ^{m−j+1} ‖p_{j−1,j}(e)‖`.
    pub envelope: f64,
    /// `‖Σ_i p_{m,i}(e) − e‖_F`.
    pub conservation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub j: usize,
    /// Largest eigenvalue of `e`.
    pub rho: f64,
    pub rows: Vec<DecayRow>,
    pub holds: bool,
}

/// Checks the geometric envelope of the `j`-th escape coordinate for
/// `j ≤ m ≤ m_max`, and mass conservation at each of those levels.
pub fn decay_check(e: &Effect, j: usize, m_max: usize, tol: &Tolerances) -> Result<DecayReport> {
    if j == 0 {
        return Err(Error::IndexOutOfRange { index: 0, max: m_max + 1 });
    }
    let rho = e.herm().eigen().max().max(0.0);
    if rho >= 1.0 - tol.kernel_tol {
        return Err(Error::SpectralMassAtOne { max_eigenvalue: rho });
    }
    let base = eval_level(j - 1, e, tol)?[j - 1].herm().operator_norm();
    let mut rows = Vec::new();
    let mut holds = true;
    for m in j..=m_max {
        let level = eval_level(m, e, tol)?;
        let norm = level[j - 1].herm().operator_norm();
        let envelope = libm::pow(rho, (m - j + 1) as f64) * base;
        let conservation = HermMatrix::sum(e.dim(), level.iter().map(|x| x.herm())).distance(e.herm());
        holds &= norm <= envelope + tol.check_tol && conservation <= tol.check_tol;
        rows.push(DecayRow { level: m, norm, envelope, conservation });
    }
    Ok(DecayReport { j, rho, rows, holds })
}
