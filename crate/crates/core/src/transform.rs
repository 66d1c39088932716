//! The residual transform `Ψ(A) = (T_1, …, T_N, R_N)` and its iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::run_chain;
use crate::collapse::collapse_coordinates;
use crate::error::{Error, Result};
use crate::linalg::{support_basis, Effect, HermMatrix, Matrix};
use crate::povm::{Label, OrderedPovm};
use crate::tol::Tolerances;

/// Number of trailing steps averaged into [`ConvergenceReport::observed_ratio`].
pub const RATIO_WINDOW: usize = 10;

/// One application of the residual transform. The chain runs over every
/// coordinate in list order; the final residual becomes a new terminal
/// coordinate labelled with the next creation step.
pub fn psi(p: &OrderedPovm, tol: &Tolerances) -> Result<OrderedPovm> {
    let residual = p.normalization_residual();
    if !(residual <= tol.check_tol) {
        return Err(Error::NotNormalized { residual });
    }
    let chain = run_chain(p.effects())?;
    let mut effects = chain.extracted;
    effects.push(chain.residuals.last().expect("nonempty").clone());
    let mut labels = p.labels().to_vec();
    labels.push(Label::Terminal(p.last_terminal_step() + 1));
    OrderedPovm::new(effects, labels, tol)
}

/// `Ψ^m(p)`: exactly `m` applications, with no early stop.
pub fn psi_power(p: &OrderedPovm, m: usize, tol: &Tolerances) -> Result<OrderedPovm> {
    let mut cur = p.clone();
    for _ in 0..m {
        cur = psi(&cur, tol)?;
    }
    Ok(cur)
}

/// `Ψ` restricted to the original coordinates. Terminals sit after all
/// originals, so they never influence the originals' evolution.
pub fn psi_originals(originals: &[Effect]) -> Result<Vec<Effect>> {
    Ok(run_chain(originals)?.extracted)
}

/// `A^{(m)}` together with its step count.
#[derive(Clone, Debug)]
pub struct PsiIterate {
    pub povm: OrderedPovm,
    pub step: usize,
}

/// Distances of the original coordinates to their collapse targets.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    /// `distances[m][k] = ‖A_{k+1}^{(m)} − B_{k+1}‖_F`.
    pub distances: Vec<Vec<f64>>,
    /// Largest change of an original coordinate in the last step taken.
    pub last_step_change: f64,
    pub converged: bool,
    /// Geometric-mean ratio of `max_k ‖A_k^{(m)} − B_k‖` over the last
    /// [`RATIO_WINDOW`] steps; `None` when too few steps ran or the distance
    /// reached zero.
    pub observed_ratio: Option<f64>,
}

impl ConvergenceReport {
    pub fn steps(&self) -> usize {
        self.distances.len() - 1
    }

    /// `max_k` distance at the last recorded step.
    pub fn final_distance(&self) -> f64 {
        max_of(self.distances.last().expect("step 0 is always recorded"))
    }

    /// Distance history of one original coordinate (1-based).
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.distances.iter().map(|d| d[k - 1]).collect()
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, &b| a.max(b))
}

fn distances_to(originals: &[Effect], targets: &[Effect]) -> Vec<f64> {
    originals.iter().zip(targets).map(|(a, b)| a.distance(b)).collect()
}

fn observed_ratio(distances: &[Vec<f64>]) -> Option<f64> {
    if distances.len() <= RATIO_WINDOW {
        return None;
    }
    let last = max_of(&distances[distances.len() - 1]);
    let first = max_of(&distances[distances.len() - 1 - RATIO_WINDOW]);
    if first > 0.0 && last > 0.0 {
        Some(libm::pow(last / first, 1.0 / RATIO_WINDOW as f64))
    } else {
        None
    }
}

fn targets(p: &OrderedPovm, tol: &Tolerances) -> Result<Vec<Effect>> {
    Ok(collapse_coordinates(p.dim(), p.originals(), tol)?.0)
}

/// Applies `Ψ` until `m_max` steps or until no original coordinate moves by
/// more than `conv_tol`, keeping every terminal coordinate.
pub fn iterate_psi(p: &OrderedPovm, m_max: usize, tol: &Tolerances) -> Result<(PsiIterate, ConvergenceReport)> {
    let goal = targets(p, tol)?;
    let mut cur = p.clone();
    let mut distances = vec![distances_to(cur.originals(), &goal)];
    let mut last_step_change = f64::INFINITY;
    let mut converged = false;
    let mut step = 0;
    while step < m_max {
        let next = psi(&cur, tol)?;
        last_step_change = max_of(&distances_to(next.originals(), cur.originals()));
        distances.push(distances_to(next.originals(), &goal));
        cur = next;
        step += 1;
        if last_step_change <= tol.conv_tol {
            converged = true;
            break;
        }
    }
    let observed_ratio = observed_ratio(&distances);
    Ok((PsiIterate { povm: cur, step }, ConvergenceReport { distances, last_step_change, converged, observed_ratio }))
}

/// Originals-only iteration: the same original coordinates as
/// [`iterate_psi`], with all terminal mass pooled into one escape effect.
#[derive(Clone, Debug)]
pub struct OriginalsIterate {
    pub originals: Vec<Effect>,
    /// `I − Σ originals`.
    pub escape: Effect,
    pub step: usize,
}

pub fn iterate_originals(
    p: &OrderedPovm,
    m_max: usize,
    tol: &Tolerances,
) -> Result<(OriginalsIterate, ConvergenceReport)> {
    let residual = p.normalization_residual();
    if !(residual <= tol.check_tol) {
        return Err(Error::NotNormalized { residual });
    }
    let goal = targets(p, tol)?;
    let mut cur = p.originals().to_vec();
    let mut distances = vec![distances_to(&cur, &goal)];
    let mut last_step_change = f64::INFINITY;
    let mut converged = false;
    let mut step = 0;
    while step < m_max {
        let next = psi_originals(&cur)?;
        last_step_change = max_of(&distances_to(&next, &cur));
        distances.push(distances_to(&next, &goal));
        cur = next;
        step += 1;
        if last_step_change <= tol.conv_tol {
            converged = true;
            break;
        }
    }
    let mut esc = Matrix::identity(p.dim());
    for e in &cur {
        esc = &esc - e.matrix();
    }
    let escape = Effect::from_computed(&esc)?;
    let observed_ratio = observed_ratio(&distances);
    Ok((
        OriginalsIterate { originals: cur, escape, step },
        ConvergenceReport { distances, last_step_change, converged, observed_ratio },
    ))
}

/// Originals of `A^{(0)}, …, A^{(m)}`.
pub fn originals_orbit(p: &OrderedPovm, m: usize) -> Result<Vec<Vec<Effect>>> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(p.originals().to_vec());
    for i in 0..m {
        let next = psi_originals(&out[i])?;
        out.push(next);
    }
    Ok(out)
}

/// `(I − A_1)^{m/2} A_2 (I − A_1)^{m/2}`, the closed form of the second
/// original coordinate after `m` steps.
pub fn second_coordinate_law(a1: &Effect, a2: &Effect, m: usize) -> Effect {
    let root = a1.complement().herm().map_spectrum(|l| libm::pow(l.max(0.0), m as f64 / 2.0));
    let out = &(root.matrix() * a2.matrix()) * root.matrix();
    Effect::from_computed(&out).expect("congruence of an effect by a contraction")
}

/// Lower bounds `ε_r` on the visible mass `G_{r-1} = Σ_{j<r} P_{j-1}A_jP_{j-1}`
/// off the joint kernel `F_{r-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// `(r, ε_r)` for `r = 2..=k`.
    pub epsilons: Vec<(usize, f64)>,
    /// `max_r √(1 − ε_r)`, a rate valid for every coordinate up to `k`.
    pub predicted_rho: f64,
    pub gap_holds: bool,
}

impl GapReport {
    /// `√(1 − ε_r)`, the asymptotic rate of coordinate `r` alone; `0` for
    /// the first coordinate, which never moves.
    pub fn coordinate_rho(&self, r: usize) -> Option<f64> {
        if r == 1 {
            return Some(0.0);
        }
        self.epsilons.iter().find(|&&(s, _)| s == r).map(|&(_, e)| libm::sqrt(1.0 - e))
    }
}

pub fn gap_report(p: &OrderedPovm, k: usize, tol: &Tolerances) -> Result<GapReport> {
    let residual = p.normalization_residual();
    if !(residual <= tol.check_tol) {
        return Err(Error::NotNormalized { residual });
    }
    if k == 0 || k > p.n_originals() {
        return Err(Error::IndexOutOfRange { index: k, max: p.n_originals() });
    }
    let d = p.dim();
    let (b, kernels) = collapse_coordinates(d, p.originals(), tol)?;
    let mut epsilons = Vec::with_capacity(k.saturating_sub(1));
    let mut g = HermMatrix::zeros(d);
    for r in 2..=k {
        g = g.add(b[r - 2].herm());
        let visible = HermMatrix::identity(d).sub(&kernels[r - 1]);
        let (_, basis) = support_basis(&visible, tol)?;
        let eps = if basis.cols() == 0 {
            1.0
        } else {
            g.compress_by(&basis).eigen().min().clamp(0.0, 1.0)
        };
        epsilons.push((r, eps));
    }
    let predicted_rho = epsilons.iter().map(|&(_, e)| libm::sqrt(1.0 - e)).fold(0.0, f64::max);
    let gap_holds = epsilons.iter().all(|&(_, e)| e > tol.rank_tol);
    Ok(GapReport { epsilons, predicted_rho, gap_holds })
}

/// Both readings of the fixed-point property.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointCheck {
    /// `Ψ(p)` reproduces `p` and appends a vanishing terminal.
    pub fixed: bool,
    /// Every coordinate idempotent and pairwise products vanish.
    pub algebraic: bool,
    pub psi_distance: f64,
    pub terminal_norm: f64,
    pub idempotence: f64,
    pub orthogonality: f64,
}

/// Decides whether `p` is fixed by `Ψ`, cross-checked against the direct
/// projection-valued test; disagreement is an error.
pub fn is_pvm_fixed_point(p: &OrderedPovm, tol: &Tolerances) -> Result<FixedPointCheck> {
    let q = psi(p, tol)?;
    let psi_distance = max_of(&distances_to(&q.effects()[..p.len()], p.effects()));
    let terminal_norm = q.effects().last().expect("psi appends").herm().frobenius_norm();
    let fixed = psi_distance <= tol.check_tol && terminal_norm <= tol.check_tol;

    let e = p.effects();
    let idempotence = e
        .iter()
        .map(|a| a.matrix().distance(&(a.matrix() * a.matrix())))
        .fold(0.0, f64::max);
    let mut orthogonality: f64 = 0.0;
    for i in 0..e.len() {
        for j in (i + 1)..e.len() {
            orthogonality = orthogonality.max((e[i].matrix() * e[j].matrix()).frobenius_norm());
        }
    }
    let algebraic = idempotence <= tol.check_tol && orthogonality <= tol.check_tol;
    let check = FixedPointCheck { fixed, algebraic, psi_distance, terminal_norm, idempotence, orthogonality };
    if fixed != algebraic {
        return Err(Error::CrossCheckFailed(format!(
            "Ψ-based fixed-point test says {fixed}, projection test says {algebraic} ({check:?})"
        )));
    }
    Ok(check)
}

/// Entrywise trajectory of the diagonal recursion
/// `a_k^{(m+1)} = a_k^{(m)} ∏_{j<k} (1 − a_j^{(m)})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarOrbit {
    /// `iterates[m][k][i]`: coordinate `k + 1`, entry `i`, after `m` steps.
    pub iterates: Vec<Vec<Vec<f64>>>,
    /// `a_k · 1{a_1 = … = a_{k-1} = 0}` per entry.
    pub limit: Vec<Vec<f64>>,
}

pub fn commuting_scalar_oracle(diag_drivers: &[Vec<f64>], m: usize, tol: &Tolerances) -> Result<ScalarOrbit> {
    let first = diag_drivers.first().ok_or(Error::Empty("no coordinates"))?;
    let len = first.len();
    for v in diag_drivers {
        if v.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: v.len() });
        }
    }
    for i in 0..len {
        let s: f64 = diag_drivers.iter().map(|v| v[i]).sum();
        if !((s - 1.0).abs() <= tol.check_tol) {
            return Err(Error::NotNormalized { residual: (s - 1.0).abs() });
        }
    }
    let mut iterates = Vec::with_capacity(m + 1);
    iterates.push(diag_drivers.to_vec());
    for step in 0..m {
        let cur = &iterates[step];
        let mut next = cur.clone();
        for i in 0..len {
            let mut keep = 1.0;
            for (k, row) in cur.iter().enumerate() {
                next[k][i] = row[i] * keep;
                keep *= 1.0 - row[i];
            }
        }
        iterates.push(next);
    }
    let limit = (0..diag_drivers.len())
        .map(|k| {
            (0..len)
                .map(|i| {
                    let earlier_zero = diag_drivers[..k].iter().all(|v| v[i] == 0.0);
                    if earlier_zero {
                        diag_drivers[k][i]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(ScalarOrbit { iterates, limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Effect {
        Effect::from_real_diag(&[x]).unwrap()
    }

    #[test]
    fn remark_scalar_step() {
        let tol = Tolerances::default();
        let b = OrderedPovm::new(
            vec![s(0.5), s(0.0), s(0.5)],
            vec![Label::Original(1), Label::Original(2), Label::Terminal(1)],
            &tol,
        )
        .unwrap();
        let q = psi(&b, &tol).unwrap();
        let got: Vec<f64> = q.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect();
        for (g, w) in got.iter().zip([0.5, 0.0, 0.25, 0.25]) {
            assert!((g - w).abs() < 1e-15);
        }
        assert_eq!(q.labels()[3], Label::Terminal(2));
    }

    #[test]
    fn scalar_second_coordinate_halves() {
        let tol = Tolerances::default();
        let p = OrderedPovm::from_originals(vec![s(0.5), s(0.5)], &tol).unwrap();
        let (it, rep) = iterate_psi(&p, 20, &tol).unwrap();
        assert_eq!(it.step, 20);
        assert_eq!(it.povm.len(), 22);
        for (m, d) in rep.coordinate(2).iter().enumerate() {
            let want = libm::pow(2.0, -(m as f64) - 1.0);
            assert!((d - want).abs() <= 1e-14 * want);
        }
        assert!((rep.observed_ratio.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pvm_is_fixed_and_scalars_are_not() {
        let tol = Tolerances::default();
        let pvm = OrderedPovm::from_originals(
            vec![Effect::from_real_diag(&[1.0, 0.0]).unwrap(), Effect::from_real_diag(&[0.0, 1.0]).unwrap()],
            &tol,
        )
        .unwrap();
        assert!(is_pvm_fixed_point(&pvm, &tol).unwrap().fixed);
        let halves = OrderedPovm::from_originals(vec![s(0.5), s(0.5)], &tol).unwrap();
        assert!(!is_pvm_fixed_point(&halves, &tol).unwrap().fixed);
    }

    #[test]
    fn gap_of_pvm_is_one() {
        let tol = Tolerances::default();
        let pvm = OrderedPovm::from_originals(
            vec![
                Effect::from_real_diag(&[1.0, 0.0, 0.0]).unwrap(),
                Effect::from_real_diag(&[0.0, 1.0, 0.0]).unwrap(),
                Effect::from_real_diag(&[0.0, 0.0, 1.0]).unwrap(),
            ],
            &tol,
        )
        .unwrap();
        let g = gap_report(&pvm, 3, &tol).unwrap();
        assert_eq!(g.epsilons, vec![(2, 1.0), (3, 1.0)]);
        assert!(g.gap_holds);
        assert_eq!(g.predicted_rho, 0.0);
    }

    #[test]
    fn scalar_oracle_examples() {
        let tol = Tolerances::default();
        let o = commuting_scalar_oracle(&[vec![0.0, 0.5, 1.0 / 3.0], vec![1.0, 0.5, 1.0 / 3.0], vec![0.0, 0.0, 1.0 / 3.0]], 12, &tol)
            .unwrap();
        for (m, it) in o.iterates.iter().enumerate() {
            assert_eq!(it[1][0], 1.0);
            assert!((it[1][1] - libm::pow(0.5, m as f64 + 1.0)).abs() < 1e-16);
            assert!(it[2][2] <= (1.0 / 3.0) * libm::pow(2.0 / 3.0, m as f64) + 1e-16);
        }
        assert_eq!(o.limit[1], vec![1.0, 0.0, 0.0]);
        assert!(commuting_scalar_oracle(&[vec![0.5], vec![0.4]], 1, &tol).is_err());
    }
}
