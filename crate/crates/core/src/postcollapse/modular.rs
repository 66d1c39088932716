//! The escape polynomials reduced modulo an NTT-friendly prime.
//!
//! Beyond the exact level cap the integer coefficients become too large to
//! store, so the identities are checked coefficientwise modulo [`PRIME`]
//! instead. The family is evaluated at `N`-th roots of unity with `N` larger
//! than every degree involved, run through the recursion pointwise, and
//! interpolated back; nothing aliases, so the recovered coefficient vectors
//! are exactly the integer coefficients reduced mod [`PRIME`].

use alloc::vec;
use alloc::vec::Vec;

use super::degrees;

pub const PRIME: u64 = 998_244_353;
const GENERATOR: u64 = 3;
const MAX_LOG: u32 = 23;

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut r = 1;
    b %= PRIME;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

fn ntt(a: &mut [u64], invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(GENERATOR, (PRIME - 1) / len as u64);
        if invert {
            w = pow_mod(w, PRIME - 2);
        }
        let mut twiddles = Vec::with_capacity(len / 2);
        let mut x = 1;
        for _ in 0..len / 2 {
            twiddles.push(x);
            x = x * w % PRIME;
        }
        for chunk in a.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(len / 2);
            for ((u, v), &tw) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let s = *u;
                let t = *v * tw % PRIME;
                *u = if s + t >= PRIME { s + t - PRIME } else { s + t };
                *v = if s >= t { s - t } else { s + PRIME - t };
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod(n as u64, PRIME - 2);
        for x in a.iter_mut() {
            *x = *x * inv_n % PRIME;
        }
    }
}

/// Coefficients of `Π (small integer polynomials)` mod [`PRIME`], schoolbook.
fn small_product(factors: &[Vec<i64>]) -> Vec<u64> {
    let mut acc = vec![1u64];
    for f in factors {
        let mut next = vec![0u64; acc.len() + f.len() - 1];
        for (i, &a) in acc.iter().enumerate() {
            for (j, &b) in f.iter().enumerate() {
                let b = b.rem_euclid(PRIME as i64) as u64;
                next[i + j] = (next[i + j] + a * b) % PRIME;
            }
        }
        acc = next;
    }
    acc
}

fn matches(coeffs: &[u64], want: &[u64]) -> bool {
    coeffs.iter().enumerate().all(|(i, &c)| c == want.get(i).copied().unwrap_or(0))
}

/// Outcome of the reduced checks at one level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModularLevel {
    pub level: usize,
    /// Transform length used; exceeds the top degree `C_{m+1}`.
    pub points: usize,
    pub top_degree: usize,
    /// `Σ_j p_{m,j} ≡ t`.
    pub sum_identity: bool,
    /// `p_{m,1} ≡ t^{m+1}`.
    pub first_closed_form: bool,
    /// `p_{m,2} ≡ t^m Π_{ℓ=1..m} (1 − t^ℓ)` (vacuous at level 0).
    pub second_closed_form: bool,
}

impl ModularLevel {
    pub fn holds(&self) -> bool {
        self.sum_identity && self.first_closed_form && self.second_closed_form
    }
}

/// Runs the reduced checks for every level in `levels`.
pub fn check_levels_mod_prime(levels: core::ops::RangeInclusive<usize>) -> Vec<ModularLevel> {
    let top = *levels.end();
    let top_degree = *degrees(top).last().expect("level has m + 1 polynomials");
    let mut log = 1;
    while (1usize << log) <= top_degree {
        log += 1;
    }
    assert!(log <= MAX_LOG, "degree {top_degree} exceeds the transform size supported by the prime");
    let n = 1usize << log;
    let omega = pow_mod(GENERATOR, (PRIME - 1) / n as u64);
    let mut points = Vec::with_capacity(n);
    let mut x = 1;
    for _ in 0..n {
        points.push(x);
        x = x * omega % PRIME;
    }

    let mut out = Vec::new();
    let mut family: Vec<Vec<u64>> = vec![points.clone()];
    for m in 0..=top {
        if levels.contains(&m) {
            out.push(check_level(m, n, &family));
        }
        if m == top {
            break;
        }
        let mut next = Vec::with_capacity(m + 2);
        let mut prefix = vec![1u64; n];
        for p in &family {
            let mut q = vec![0u64; n];
            for i in 0..n {
                let pp = prefix[i] * p[i] % PRIME;
                q[i] = points[i] * pp % PRIME;
                prefix[i] = (prefix[i] + PRIME - pp) % PRIME;
            }
            next.push(q);
        }
        next.push(prefix.iter().zip(&points).map(|(&a, &t)| a * t % PRIME).collect());
        family = next;
    }
    out
}

fn check_level(m: usize, n: usize, family: &[Vec<u64>]) -> ModularLevel {
    let interpolate = |values: Vec<u64>| {
        let mut v = values;
        ntt(&mut v, true);
        v
    };
    let mut sum = vec![0u64; n];
    for p in family {
        for (s, &v) in sum.iter_mut().zip(p) {
            *s = (*s + v) % PRIME;
        }
    }
    let mut t = vec![0u64; 2];
    t[1] = 1;
    let sum_identity = matches(&interpolate(sum), &t);

    let mut first = vec![0u64; m + 2];
    first[m + 1] = 1;
    let first_closed_form = matches(&interpolate(family[0].clone()), &first);

    let second_closed_form = if m == 0 {
        true
    } else {
        let mut factors: Vec<Vec<i64>> = Vec::with_capacity(m + 1);
        let mut tm = vec![0i64; m + 1];
        tm[m] = 1;
        factors.push(tm);
        for l in 1..=m {
            let mut f = vec![0i64; l + 1];
            f[0] = 1;
            f[l] = -1;
            factors.push(f);
        }
        matches(&interpolate(family[1].clone()), &small_product(&factors))
    };
    ModularLevel {
        level: m,
        points: n,
        top_degree: *degrees(m).last().expect("nonempty"),
        sum_identity,
        first_closed_form,
        second_closed_form,
    }
}
