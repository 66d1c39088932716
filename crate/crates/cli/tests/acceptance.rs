//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the PASS/FAIL lines always reach the output; exits nonzero when a
//! criterion outside `KNOWN_UNATTAINABLE` fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use residua_cli::doc::{Loaded, PovmDocument};
use residua_core::chain::{recover_contractions, run_chain};
use residua_core::collapse::{
    canonical_preimage, collapse_map, couple_fiber, fiber_membership, fiber_membership_of, is_collapsed,
    max_coupling, sector_basis, CollapsedPovm, CouplingSpec,
};
use residua_core::dilation::{block_compression_on, build_dilation, Block};
use residua_core::fixtures;
use residua_core::generators::{gen, gen_povm, GenSpec, Kind};
use residua_core::linalg::{herm_eigen, psd_sqrt, Effect, Matrix, Subspace, C64};
use residua_core::postcollapse::{
    check_levels_mod_prime, closed_forms, decay_check, poly_family, prefix_family, psi_on_collapsed_equivalence,
    scalar_values, LEVEL_CAP,
};
use residua_core::povm::OrderedPovm;
use residua_core::transform::{
    commuting_scalar_oracle, gap_report, is_pvm_fixed_point, iterate_originals, originals_orbit, psi, psi_originals,
    second_coordinate_law,
};
use residua_core::Tolerances;

/// Criteria that cannot be met as stated; each is explained in the README.
/// They still run and print their honest status.
const KNOWN_UNATTAINABLE: &[usize] = &[11, 16];

const TOL: f64 = 1e-10;
const GOLDEN: f64 = 1e-12;
const INSTANCES: u64 = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

/// The shared random family: dimensions 1..=8, 1..=6 effects.
fn random_instances() -> Vec<(u64, OrderedPovm)> {
    (0..INSTANCES)
        .map(|seed| {
            let dim = 1 + (seed % 8) as usize;
            let n = 1 + ((seed / 8) % 6) as usize;
            (seed, gen_povm(Kind::Random, dim, n, seed).expect("valid spec"))
        })
        .collect()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run_cli(args: &[&str]) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_residua"))
        .args(args)
        .env_remove("RESIDUA_TOL")
        .output()
        .expect("binary runs");
    (out.status.code(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn load_collapsed(path: &Path) -> CollapsedPovm {
    let text = std::fs::read_to_string(path).unwrap();
    Loaded::<PovmDocument>::parse(&text, &path.display().to_string()).unwrap().to_collapsed(&tol()).unwrap()
}

fn diag_gap(m: &Matrix, want: &[f64]) -> f64 {
    let d = Matrix::from_real_diag(want);
    m.distance(&d)
}

fn qubit_collapse_golden() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let emitted = dir.path().join("b.json");
    let input = fixture("noncommuting_qubit.json");
    let (code, err) = run_cli(&["collapse", input.to_str().unwrap(), "--emit", emitted.to_str().unwrap()]);
    if code != Some(0) {
        return outcome(false, format!("collapse exited {code:?}: {err}"));
    }
    let b = load_collapsed(&emitted);
    let mut worst = diag_gap(b.b_esc().matrix(), &[0.6, 0.7]);
    for (k, want) in [[0.4, 0.0], [0.0, 0.3], [0.0, 0.0]].iter().enumerate() {
        worst = worst.max(diag_gap(b.b()[k].matrix(), want));
    }
    let mut identity: f64 = 0.0;
    for k in 0..2 {
        let bk = b.b()[k].matrix();
        identity = identity.max((bk * b.b_esc().matrix()).distance(&(bk - &(bk * bk))));
    }
    outcome(
        worst <= GOLDEN && identity <= GOLDEN,
        format!("coordinates off by {worst:.1e}, escape identities off by {identity:.1e}"),
    )
}

fn fiber_pair_golden() -> Outcome {
    let (a, a_prime) = fixtures::diagonal_fiber_pair();
    let want = fixtures::diagonal_fiber_collapsed();
    let dist_a = collapse_map(&a, &tol()).unwrap().distance(&want);
    let dist_ap = collapse_map(&a_prime, &tol()).unwrap().distance(&want);
    let off = a_prime.effects()[1].matrix()[(0, 1)];
    let distinct = a != a_prime && off == C64::new(0.25, 0.0);
    let (code, err) = run_cli(&[
        "fiber",
        fixture("fiber_a_prime.json").to_str().unwrap(),
        "--against",
        fixture("fiber_collapsed.json").to_str().unwrap(),
    ]);
    outcome(
        dist_a <= GOLDEN && dist_ap <= GOLDEN && distinct && code == Some(0),
        format!("|C(A) - b| = {dist_a:.1e}, |C(A') - b| = {dist_ap:.1e}, A'_2 off-diagonal {}, cli exit {code:?} {err}", off.re),
    )
}

fn scalar_halves() -> Outcome {
    let p = fixtures::scalar_halves();
    let orbit = originals_orbit(&p, 50).unwrap();
    let worst_rel = orbit
        .iter()
        .enumerate()
        .map(|(m, it)| {
            let want = 2f64.powi(-(m as i32) - 1);
            (it[1].matrix()[(0, 0)].re - want).abs() / want
        })
        .fold(0.0, f64::max);
    let b = collapse_map(&p, &tol()).unwrap();
    let limit = [b.b()[0].matrix()[(0, 0)].re, b.b()[1].matrix()[(0, 0)].re, b.b_esc().matrix()[(0, 0)].re];
    let q = psi(&b.to_ordered(&tol()).unwrap(), &tol()).unwrap();
    let image: Vec<f64> = q.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect();
    outcome(
        worst_rel <= f64::EPSILON && limit == [0.5, 0.0, 0.5] && image == [0.5, 0.0, 0.25, 0.25],
        format!("max relative error of 2^(-m-1) over m <= 50: {worst_rel:.1e}; limit {limit:?}; image {image:?}"),
    )
}

/// `B_n = A_n^{1/2} R_{n-1}^{1/2}` recomputed from the chain; rank taken
/// from `B_n B_nᴴ`, which the dilation never forms.
fn independent_rank_sum(drivers: &[Effect], t: &Tolerances) -> usize {
    let chain = run_chain(drivers).unwrap();
    let mut total = 0;
    for (n, a) in drivers.iter().enumerate() {
        let root = psd_sqrt(&chain.residuals[n]);
        let b = psd_sqrt(a).matrix() * root.matrix();
        let eig = herm_eigen(&(&b * &b.adjoint()));
        let thr = t.rank_tol * eig.spectral_radius().max(1.0);
        total += eig.values.iter().filter(|l| l.abs() > thr).count();
    }
    total
}

fn dilation_suite(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (seed, p) in instances {
        let drivers = match recover_contractions(p, &t) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        match build_dilation(&drivers, &t) {
            Ok(dil) => {
                let r = dil.residuals();
                worst = worst.max(r.isometry).max(r.extraction).max(r.tail);
                if dil.k_dim() != independent_rank_sum(&drivers, &t) {
                    failures.push(format!("seed {seed}: D = {} but ranks sum differently", dil.k_dim()));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(
        worst <= TOL && failures.is_empty(),
        format!("{} instances, worst identity residual {worst:.1e}, {} failures {:?}", instances.len(), failures.len(), failures.first()),
    )
}

fn rank_identities(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut failures = Vec::new();
    for (seed, p) in instances {
        let dil = build_dilation(&recover_contractions(p, &t).unwrap(), &t).unwrap();
        let n_blocks = dil.n_blocks();
        for n in 1..=n_blocks {
            for m in n..=n_blocks {
                match dil.block_compression(n, m) {
                    Ok((rep, dec)) => {
                        pairs += 1;
                        if rep.quotient_dim() != rep.defect_rank as isize {
                            failures.push(format!("seed {seed} [{n},{m}]"));
                        }
                        worst = worst.max(dec.decomposition_residual);
                    }
                    Err(e) => failures.push(format!("seed {seed} [{n},{m}]: {e}")),
                }
            }
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let line = Subspace::from_orthonormal(Matrix::from_real_rows(&[&[h], &[h]])).unwrap();
    let blocks = [Block { offset: 0, size: 1 }, Block { offset: 1, size: 1 }];
    let (rep, _) = block_compression_on(&line, &blocks, 1, 1, &t).unwrap();
    let c = rep.c.matrix()[(0, 0)].re;
    let example = (c - 0.5).abs() <= GOLDEN && rep.defect_rank == 1 && rep.dim_intersection == 0;
    outcome(
        worst <= TOL && failures.is_empty() && example,
        format!(
            "{pairs} block pairs, worst decomposition residual {worst:.1e}, {} rank mismatches; diagonal line: c = {c}, defect rank {}, intersection {}",
            failures.len(),
            rep.defect_rank,
            rep.dim_intersection
        ),
    )
}

fn residual_isometries(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for (_, p) in instances {
        let dil = build_dilation(&recover_contractions(p, &t).unwrap(), &t).unwrap();
        for n in 1..=dil.n_blocks() {
            match dil.residual_isometry(dil.chain(), n) {
                Ok((_, rep)) => worst = worst.max(rep.max()),
                Err(_) => failures += 1,
            }
        }
    }
    outcome(worst <= TOL && failures == 0, format!("worst residual {worst:.1e}, {failures} errors"))
}

fn fixed_points(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let mut pvm_fixed = 0;
    let mut pvm_total = 0;
    let mut disagreements = 0;
    for seed in 0..100u64 {
        let dim = 1 + (seed % 8) as usize;
        let n = 1 + (seed as usize / 8) % dim;
        let p = gen_povm(Kind::Pvm, dim, n, seed).unwrap();
        pvm_total += 1;
        match is_pvm_fixed_point(&p, &t) {
            Ok(fp) if fp.fixed => pvm_fixed += 1,
            Ok(_) => {}
            Err(_) => disagreements += 1,
        }
    }
    // A single effect is the identity, a genuine PVM; only longer random
    // families are non-PVMs.
    let non_pvm: Vec<&OrderedPovm> = instances.iter().map(|(_, p)| p).filter(|p| p.len() >= 2).collect();
    let mut random_rejected = 0;
    for p in &non_pvm {
        match is_pvm_fixed_point(p, &t) {
            Ok(fp) if !fp.fixed => random_rejected += 1,
            Ok(_) => {}
            Err(_) => disagreements += 1,
        }
    }
    outcome(
        pvm_fixed == pvm_total && random_rejected == non_pvm.len() && disagreements == 0,
        format!(
            "{pvm_fixed}/{pvm_total} PVMs fixed, {random_rejected}/{} random non-PVMs rejected, {disagreements} cross-check disagreements",
            non_pvm.len()
        ),
    )
}

fn second_coordinate(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (_, p) in instances.iter().filter(|(_, p)| p.n_originals() >= 2) {
        checked += 1;
        let orbit = originals_orbit(p, 30).unwrap();
        let (a1, a2) = (&p.originals()[0], &p.originals()[1]);
        for (m, it) in orbit.iter().enumerate() {
            worst = worst.max(it[1].distance(&second_coordinate_law(a1, a2, m)));
        }
    }
    outcome(worst <= TOL, format!("{checked} instances with two or more effects, m <= 30, worst {worst:.1e}"))
}

/// Steps allowed for a diagonal instance to come within 1e-8 of its limit.
const LIMIT_STEPS: usize = 5000;

fn commuting_oracle() -> Outcome {
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut slowest = 0;
    let mut unconverged = 0;
    let count = 50;
    for seed in 0..count {
        let dim = 1 + (seed % 6) as usize;
        let n = 2 + (seed as usize / 6) % 4;
        let p = gen_povm(Kind::Commuting, dim, n, seed).unwrap();
        let diags: Vec<Vec<f64>> = p.originals().iter().map(|e| e.matrix().real_diagonal().unwrap()).collect();
        let oracle = commuting_scalar_oracle(&diags, 100, &t).unwrap();
        let orbit = originals_orbit(&p, 100).unwrap();
        for (it, want) in orbit.iter().zip(&oracle.iterates) {
            for (e, w) in it.iter().zip(want) {
                worst = worst.max(e.matrix().distance(&Matrix::from_real_diag(w)));
            }
        }
        let limit: Vec<Matrix> = oracle.limit.iter().map(|w| Matrix::from_real_diag(w)).collect();
        let gap = |it: &[Effect]| it.iter().zip(&limit).map(|(e, l)| e.matrix().distance(l)).fold(0.0, f64::max);
        let mut it = p.originals().to_vec();
        let mut m = 0;
        while gap(&it) > 1e-8 && m < LIMIT_STEPS {
            it = psi_originals(&it).unwrap();
            m += 1;
        }
        if gap(&it) > 1e-8 {
            unconverged += 1;
        }
        slowest = slowest.max(m);
    }
    outcome(
        worst <= TOL && unconverged == 0,
        format!(
            "{count} diagonal instances: oracle gap {worst:.1e} for m <= 100; within 1e-8 of the limit after at most {slowest} steps ({unconverged} not within {LIMIT_STEPS})"
        ),
    )
}

fn gap_rate() -> Outcome {
    let t = tol();
    let p = fixtures::noncommuting_qubit();
    let g = gap_report(&p, 3, &t).unwrap();
    let (e2, e3) = (g.epsilons[0].1, g.epsilons[1].1);
    let (_, rep) = iterate_originals(&p, 80, &t).unwrap();
    let d2 = rep.coordinate(2);
    let bound = 0.6f64.sqrt() + 0.05;
    let worst_ratio = (10..d2.len() - 1).filter(|&m| d2[m] > 0.0).map(|m| d2[m + 1] / d2[m]).fold(0.0, f64::max);
    outcome(
        (e2 - 0.4).abs() <= GOLDEN && (e3 - 0.3).abs() <= GOLDEN && worst_ratio <= bound,
        format!("eps_2 = {e2}, eps_3 = {e3}, largest step ratio for m >= 10: {worst_ratio:.6} (bound {bound:.6})"),
    )
}

fn finite_convergence() -> Outcome {
    let t = tol();
    let count = 100u64;
    let mut failing = Vec::new();
    let mut worst: f64 = 0.0;
    for seed in 0..count {
        let dim = 1 + (seed % 6) as usize;
        let n = 2 + (seed as usize / 6) % 5;
        let p = gen_povm(Kind::Random, dim, n, 10_000 + seed).unwrap();
        let (_, rep) = iterate_originals(&p, 500, &t).unwrap();
        let d = rep.final_distance();
        worst = worst.max(d);
        if d > 1e-6 {
            let rho = gap_report(&p, p.n_originals(), &t).map(|g| g.predicted_rho).unwrap_or(f64::NAN);
            failing.push((seed, d, rho));
        }
    }
    let example = failing
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(s, d, r)| format!("; worst seed {s}: distance {d:.1e}, predicted rate {r:.6} (rate^500 = {:.1e})", r.powi(500)))
        .unwrap_or_default();
    let explained = failing.iter().filter(|(_, _, r)| r.powi(500) > 1e-6).count();
    outcome(
        failing.is_empty(),
        format!(
            "{}/{count} random instances within 1e-6 by m = 500, worst {worst:.1e}; {explained}/{} misses have a gap bound rate^500 above 1e-6{example}",
            count as usize - failing.len(),
            failing.len()
        ),
    )
}

fn harmonic_truncation() -> Outcome {
    let p = fixtures::harmonic_truncation(50);
    let orbit = originals_orbit(&p, 200).unwrap();
    let worst = orbit
        .iter()
        .enumerate()
        .map(|(m, it)| (it[1].herm().operator_norm() - (1.0 - 1.0 / 50.0f64).powi(m as i32 + 1)).abs())
        .fold(0.0, f64::max);
    outcome(worst <= GOLDEN, format!("d = 50, m <= 200, worst |norm - (49/50)^(m+1)| = {worst:.1e}"))
}

fn collapse_predicate(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let collapsed_ok = instances
        .iter()
        .filter(|(_, p)| {
            let b = collapse_map(p, &t).unwrap();
            is_collapsed(b.b(), b.b_esc(), &t).unwrap().collapsed
        })
        .count();
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let dim = 1 + (seed % 8) as usize;
        let n = 1 + (seed as usize / 8) % 6;
        let b = gen(&GenSpec::new(Kind::Collapsed, dim, n, 20_000 + seed)).unwrap().into_collapsed().unwrap();
        let back = collapse_map(&canonical_preimage(&b, &t).unwrap(), &t).unwrap();
        worst = worst.max(back.distance(&b));
    }
    outcome(
        collapsed_ok == instances.len() && worst <= TOL,
        format!("{collapsed_ok}/{} collapses pass the predicate; 100 preimage round trips, worst {worst:.1e}", instances.len()),
    )
}

/// Adds `±δ vvᴴ` to `A_k`, with `v` the top eigenvector of `B_k` inside the
/// sector `E_{k-1}` (or any unit vector of `E_{k-1}` when `B_k = 0`).
fn perturbed(p: &OrderedPovm, b: &CollapsedPovm, k: usize, delta: f64) -> Option<Vec<Effect>> {
    let e = b.filtration(k - 1).eigen();
    let (_, sector) = e.select(|l| l > 0.5);
    if sector.cols() == 0 {
        return None;
    }
    let bk = b.coordinate(k);
    let within = herm_eigen(&sector.adjoint_mul(&(bk.matrix() * &sector)));
    let top = within.vectors.column(within.values.len() - 1);
    let v = &sector * &Matrix::from_columns(top.len(), &[top]);
    let bump = &v * &v.adjoint();
    for sign in [1.0, -1.0] {
        let m = p.originals()[k - 1].matrix() + &bump.scale(sign * delta);
        if let Ok(e) = Effect::from_matrix(m) {
            let mut out = p.originals().to_vec();
            out[k - 1] = e;
            return Some(out);
        }
    }
    None
}

fn fiber_sensitivity(instances: &[(u64, OrderedPovm)]) -> Outcome {
    let t = tol();
    let mut members = 0;
    let mut flipped = 0;
    let mut perturbations = 0;
    let mut skipped = 0;
    for (_, p) in instances {
        let b = collapse_map(p, &t).unwrap();
        if fiber_membership(p, &b, &t).unwrap().member {
            members += 1;
        }
        for k in 1..=p.n_originals() {
            if b.filtration(k - 1).matrix().frobenius_norm() < 0.5 {
                continue;
            }
            match perturbed(p, &b, k, 1e-3) {
                Some(originals) => {
                    perturbations += 1;
                    if !fiber_membership_of(&originals, &b, &t).unwrap().member {
                        flipped += 1;
                    }
                }
                None => skipped += 1,
            }
        }
    }
    outcome(
        members == instances.len() && flipped == perturbations && skipped == 0,
        format!(
            "{members}/{} instances in their own fiber; {flipped}/{perturbations} perturbations on visible sectors leave it ({skipped} not representable as effects)",
            instances.len()
        ),
    )
}

fn coupling() -> Outcome {
    let t = tol();
    let target = fixtures::diagonal_fiber_collapsed();
    let (_, a_prime) = fixtures::diagonal_fiber_pair();
    let spec = CouplingSpec { c_block: Matrix::from_real_rows(&[&[0.25]]), x_block: Matrix::from_real_rows(&[&[0.25]]) };
    let built = couple_fiber(&target, &spec, &t).unwrap();
    let exact = built.originals().iter().zip(a_prime.effects()).all(|(x, y)| x.matrix() == y.matrix());

    let mut found = 0;
    let mut good = 0;
    let mut worst: f64 = 0.0;
    let mut smallest_offdiag = f64::INFINITY;
    let mut seed = 30_000u64;
    while found < 50 && seed < 60_000 {
        seed += 1;
        let Some(b) = gen(&GenSpec::new(Kind::Collapsed, 3, 4, seed)).unwrap().into_collapsed() else { continue };
        if b.len() < 3 {
            continue;
        }
        let (Ok(w1), Ok(w2)) = (sector_basis(&b, 1, &t), sector_basis(&b, 2, &t)) else { continue };
        if w1.cols() != 1 || w2.cols() != 1 {
            continue;
        }
        let l1 = w1.adjoint_mul(&(b.leftovers()[0].matrix() * &w1));
        let c = l1.scale(0.5);
        let direction = Matrix::from_fn(1, 1, |_, _| C64::new(0.6, 0.8));
        let Ok(sigma) = max_coupling(&b, &direction, &c, &t) else { continue };
        if sigma <= 1e-6 {
            continue;
        }
        found += 1;
        let x = direction.scale(0.5 * sigma);
        let Ok(p) = couple_fiber(&b, &CouplingSpec { c_block: c, x_block: x }, &t) else { continue };
        let off = w2.adjoint_mul(&(p.originals()[1].matrix() * &w1)).frobenius_norm();
        let dist = collapse_map(&p, &t).unwrap().distance(&b);
        smallest_offdiag = smallest_offdiag.min(off);
        worst = worst.max(dist);
        if off > 0.0 && dist <= TOL && fiber_membership(&p, &b, &t).unwrap().member {
            good += 1;
        }
    }
    outcome(
        exact && found == 50 && good == found,
        format!(
            "fiber pair rebuilt exactly: {exact}; {good}/{found} random one-dimensional-sector couplings in the fiber, worst collapse gap {worst:.1e}, smallest off-diagonal {smallest_offdiag:.2e}"
        ),
    )
}

fn escape_polynomials() -> Outcome {
    let mut exact_ok = true;
    for m in 0..=LEVEL_CAP {
        let f = poly_family(m).unwrap();
        exact_ok &= f.sum_defect().is_zero() && f.polys()[..2.min(f.polys().len())] == closed_forms(m)[..];
    }
    let closed_ok = (LEVEL_CAP + 1..=12).all(|m| prefix_family(m, 2) == closed_forms(m));
    let modular_ok = check_levels_mod_prime(LEVEL_CAP + 1..=12).iter().all(|l| l.holds());
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let grid_min = (0..=12)
        .flat_map(|m| grid.iter().flat_map(move |&t| scalar_values(m, t)))
        .fold(f64::INFINITY, f64::min);
    let all_exact = exact_ok && LEVEL_CAP >= 12;
    outcome(
        all_exact && closed_ok && grid_min >= -1e-15,
        format!(
            "exact rational identities through level {LEVEL_CAP}: {exact_ok}; closed forms exact through 12: {closed_ok}; \
             sum identity for levels {}..=12 only modulo a prime: {modular_ok}; grid minimum {grid_min:e}",
            LEVEL_CAP + 1
        ),
    )
}

fn two_paths_and_decay() -> Outcome {
    let t = tol();
    let b = fixtures::noncommuting_qubit_collapsed();
    let worst = (0..=8).map(|m| psi_on_collapsed_equivalence(&b, m, &t).unwrap().max_distance).fold(0.0, f64::max);
    let reports: Vec<_> = (1..=3).map(|j| decay_check(b.b_esc(), j, 12, &t).unwrap()).collect();
    let margin = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.envelope - row.norm))
        .fold(f64::INFINITY, f64::min);
    outcome(
        worst <= TOL && reports.iter().all(|r| r.holds),
        format!("two paths agree to {worst:.1e} for m <= 8; smallest envelope margin {margin:.2e} (rho = {:.6})", reports[0].rho),
    )
}

fn main() {
    let started = Instant::now();
    let instances = random_instances();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "qubit collapse golden", Box::new(qubit_collapse_golden)),
        (2, "fiber pair golden", Box::new(fiber_pair_golden)),
        (3, "scalar halves", Box::new(scalar_halves)),
        (4, "dilation identities", Box::new(|| dilation_suite(&instances))),
        (5, "rank identities", Box::new(|| rank_identities(&instances))),
        (6, "residual isometries", Box::new(|| residual_isometries(&instances))),
        (7, "PVM fixed points", Box::new(|| fixed_points(&instances))),
        (8, "second-coordinate law", Box::new(|| second_coordinate(&instances))),
        (9, "commuting oracle", Box::new(commuting_oracle)),
        (10, "gap and rate", Box::new(gap_rate)),
        (11, "finite-dimensional convergence", Box::new(finite_convergence)),
        (12, "harmonic truncation", Box::new(harmonic_truncation)),
        (13, "collapse predicate and preimage", Box::new(|| collapse_predicate(&instances))),
        (14, "fiber membership sensitivity", Box::new(|| fiber_sensitivity(&instances))),
        (15, "fiber coupling", Box::new(coupling)),
        (16, "escape polynomial identities", Box::new(escape_polynomials)),
        (17, "two paths and decay envelope", Box::new(two_paths_and_decay)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in &criteria {
        let t0 = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {status} [{name}] {} ({:.2}s)", o.detail, t0.elapsed().as_secs_f64());
        if !o.pass && !KNOWN_UNATTAINABLE.contains(id) {
            unexpected.push(*id);
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
