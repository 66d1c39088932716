//! Seeded instance generation. The stream is ChaCha8 seeded through
//! `seed_from_u64`; all floating-point work after sampling goes through
//! `libm`, so a spec maps to the same bits on every platform.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::collapse::{collapse_map, CollapsedPovm};
use crate::error::{Error, Result};
use crate::linalg::{reorthonormalize_columns, Effect, HermMatrix, Matrix, C64};
use crate::povm::OrderedPovm;
use crate::tol::Tolerances;

pub const MAX_DIM: usize = 64;
/// Weight of the random component in [`Kind::NearPvm`].
pub const NEAR_PVM_MIX: f64 = 0.05;
/// Ridge added to `Σ G_j` before its inverse square root.
pub const RIDGE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Random,
    Pvm,
    Commuting,
    Collapsed,
    NearPvm,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::Random, Kind::Pvm, Kind::Commuting, Kind::Collapsed, Kind::NearPvm];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Random => "random",
            Kind::Pvm => "pvm",
            Kind::Commuting => "commuting",
            Kind::Collapsed => "collapsed",
            Kind::NearPvm => "near_pvm",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenSpec {
    pub dim: usize,
    pub n_effects: usize,
    pub kind: Kind,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: Kind, dim: usize, n_effects: usize, seed: u64) -> Self {
        Self { dim, n_effects, kind, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::InvalidSpec(format!("dim {} outside 1..={MAX_DIM}", self.dim)));
        }
        if self.n_effects == 0 {
            return Err(Error::InvalidSpec("at least one effect is required".into()));
        }
        if matches!(self.kind, Kind::Pvm | Kind::NearPvm) && self.n_effects > self.dim {
            return Err(Error::InvalidSpec(format!(
                "{} needs n_effects ≤ dim (got {} > {})",
                self.kind, self.n_effects, self.dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generated {
    Povm(OrderedPovm),
    Collapsed(CollapsedPovm),
}

impl Generated {
    pub fn into_povm(self) -> Option<OrderedPovm> {
        match self {
            Generated::Povm(p) => Some(p),
            Generated::Collapsed(_) => None,
        }
    }

    pub fn into_collapsed(self) -> Option<CollapsedPovm> {
        match self {
            Generated::Collapsed(b) => Some(b),
            Generated::Povm(_) => None,
        }
    }
}

pub fn gen(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d, n) = (spec.dim, spec.n_effects);
    let out = match spec.kind {
        Kind::Random => Generated::Povm(complete(random_effects(&mut rng, d, n), &tol)?),
        Kind::Pvm => Generated::Povm(complete(pvm_effects(&mut rng, d, n), &tol)?),
        Kind::Commuting => Generated::Povm(complete(commuting_effects(&mut rng, d, n), &tol)?),
        Kind::Collapsed => {
            let p = complete(random_effects(&mut rng, d, n), &tol)?;
            Generated::Collapsed(collapse_map(&p, &tol)?)
        }
        Kind::NearPvm => {
            let sharp = pvm_effects(&mut rng, d, n);
            let noise = random_effects(&mut rng, d, n);
            let mixed = sharp
                .iter()
                .zip(&noise)
                .map(|(p, r)| &p.scale(1.0 - NEAR_PVM_MIX) + &r.scale(NEAR_PVM_MIX))
                .collect();
            Generated::Povm(complete(mixed, &tol)?)
        }
    };
    Ok(out)
}

/// Shorthand for kinds that produce an [`OrderedPovm`].
pub fn gen_povm(kind: Kind, dim: usize, n_effects: usize, seed: u64) -> Result<OrderedPovm> {
    gen(&GenSpec::new(kind, dim, n_effects, seed))?
        .into_povm()
        .ok_or_else(|| Error::InvalidSpec("kind collapsed produces a collapsed POVM".into()))
}

/// Replaces the last matrix by `I − Σ` of the others and clamps everything
/// into effects.
fn complete(mut mats: Vec<Matrix>, tol: &Tolerances) -> Result<OrderedPovm> {
    let d = mats[0].rows();
    let n = mats.len();
    let mut rest = Matrix::identity(d);
    for m in &mats[..n - 1] {
        rest = &rest - m;
    }
    mats[n - 1] = rest;
    let effects = mats.iter().map(Effect::from_computed).collect::<Result<Vec<_>>>()?;
    OrderedPovm::from_originals(effects, tol)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `A_i = S^{-1/2} G_i S^{-1/2}`, `G_i = M_iᴴM_i` with `M_i` of random row
/// count (the last is square), so most effects are rank deficient.
fn random_effects(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Matrix> {
    let ranks = Uniform::new_inclusive(1, d).expect("d ≥ 1");
    let grams: Vec<Matrix> = (0..n)
        .map(|i| {
            let r = if i + 1 == n { d } else { ranks.sample(rng) };
            let m = gaussian_matrix(rng, r, d);
            m.adjoint_mul(&m)
        })
        .collect();
    let mut s = Matrix::identity(d).scale(RIDGE);
    for g in &grams {
        s = &s + g;
    }
    let eig = HermMatrix::from_computed(&s).eigen();
    let w = eig.reassemble(|l| 1.0 / libm::sqrt(l));
    grams.iter().map(|g| &(&w * g) * &w).collect()
}

fn haar_unitary(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let mut u = gaussian_matrix(rng, d, d);
    reorthonormalize_columns(&mut u);
    u
}

/// `U D_k Uᴴ` for a random split of the coordinates into `n` nonempty
/// contiguous blocks.
fn pvm_effects(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Matrix> {
    let mut cuts: Vec<usize> = (1..d).collect();
    // Partial Fisher–Yates: the first n − 1 entries are a uniform sample.
    for i in 0..n - 1 {
        let j = Uniform::new(i, cuts.len()).expect("nonempty range").sample(rng);
        cuts.swap(i, j);
    }
    cuts.truncate(n - 1);
    cuts.sort_unstable();
    cuts.push(d);
    let u = haar_unitary(rng, d);
    let mut start = 0;
    cuts.iter()
        .map(|&end| {
            let cols: Vec<Vec<C64>> = (start..end).map(|c| u.column(c)).collect();
            start = end;
            let b = Matrix::from_columns(d, &cols);
            &b * &b.adjoint()
        })
        .collect()
}

/// Diagonal effects; each diagonal position gets weights in `[1/4, 1]`,
/// some zeroed, normalized to sum to one.
fn commuting_effects(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<Matrix> {
    let weight = Uniform::new_inclusive(0.25, 1.0).expect("valid range");
    let coin = Uniform::new(0u32, 3).expect("valid range");
    let mut diags = vec![vec![0.0; d]; n];
    for i in 0..d {
        let mut w: Vec<f64> = (0..n).map(|_| if coin.sample(rng) == 0 { 0.0 } else { weight.sample(rng) }).collect();
        if w.iter().all(|&x| x == 0.0) {
            let k = Uniform::new(0, n).expect("n ≥ 1").sample(rng);
            w[k] = 1.0;
        }
        let total: f64 = w.iter().sum();
        for (k, x) in w.into_iter().enumerate() {
            diags[k][i] = x / total;
        }
    }
    diags.iter().map(|v| Matrix::from_real_diag(v)).collect()
}
