//! The work behind each subcommand: turns loaded inputs into checks and a
//! result payload.

use residua_core::chain::{recover_contractions, run_chain, RECOVERY_SLACK};
use residua_core::collapse::{canonical_preimage, collapse_map, couple_fiber, fiber_membership, is_collapsed, CollapsedPovm, CouplingSpec};
use residua_core::dilation::build_dilation;
use residua_core::linalg::{Effect, Matrix};
use residua_core::postcollapse::{
    check_levels_mod_prime, closed_forms, decay_check, poly_family, prefix_family, psi_on_collapsed_equivalence,
    LEVEL_CAP, PRIME,
};
use residua_core::povm::OrderedPovm;
use residua_core::transform::{
    commuting_scalar_oracle, gap_report, is_pvm_fixed_point, iterate_psi, originals_orbit, psi,
    second_coordinate_law,
};
use residua_core::{Error, Tolerances};
use serde_json::{json, Value};

use crate::doc::{MatrixDocument, PovmDocument};
use crate::report::Check;

/// Steps of the second-coordinate law checked by `verify`.
pub const LAW_STEPS: usize = 30;
/// Steps of the diagonal oracle comparison run by `verify`.
pub const ORACLE_STEPS: usize = 100;
/// Highest level `postcollapse` accepts; the modular transform size bounds
/// the degree `C_{m+1}` below `2^23`.
pub const MAX_LEVEL: usize = 13;

pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: Value,
}

/// Runs a fallible stage; an error becomes a failed check carrying the
/// message in place of aborting the whole report.
fn stage<T>(checks: &mut Vec<Check>, errors: &mut Vec<String>, name: &str, r: Result<T, Error>) -> Option<T> {
    match r {
        Ok(x) => Some(x),
        Err(e) => {
            checks.push(Check::holds(name, false));
            errors.push(format!("{name}: {e}"));
            None
        }
    }
}

fn diagonals(p: &OrderedPovm) -> Option<Vec<Vec<f64>>> {
    p.originals().iter().map(|e| e.matrix().real_diagonal()).collect()
}

pub fn verify(p: &OrderedPovm, tol: &Tolerances) -> Outcome {
    let ct = tol.check_tol;
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let mut result = serde_json::Map::new();
    result.insert("dim".into(), json!(p.dim()));
    result.insert("coordinates".into(), json!(p.len()));

    checks.push(Check::at_most("normalization", p.normalization_residual(), ct));

    if let Some(chain) = stage(&mut checks, &mut errors, "chain", run_chain(p.effects())) {
        checks.push(Check::at_most("chain.partition", chain.partition_residual(), ct));
        checks.push(Check::at_most("chain.step", chain.step_residual(), ct));
        checks.push(Check::at_least("chain.monotonicity", chain.monotonicity_margin(), -ct));
    }

    if let Some(a) = stage(&mut checks, &mut errors, "contractions", recover_contractions(p, tol)) {
        if let Some(chain) = stage(&mut checks, &mut errors, "contractions.chain", run_chain(&a)) {
            let gap = chain.extracted.iter().zip(p.effects()).map(|(x, y)| x.distance(y)).fold(0.0, f64::max);
            checks.push(Check::at_most("contractions.rebuild", gap, RECOVERY_SLACK));
        }
    }

    let mut drivers = p.effects().to_vec();
    drivers.push(Effect::identity(p.dim()));
    if let Some(dil) = stage(&mut checks, &mut errors, "dilation", build_dilation(&drivers, tol)) {
        let r = dil.residuals();
        checks.push(Check::at_most("dilation.isometry", r.isometry, ct));
        checks.push(Check::at_most("dilation.extraction", r.extraction, ct));
        checks.push(Check::at_most("dilation.tail", r.tail, ct));
        checks.push(Check::at_most("dilation.factorization", r.factorization, ct));
        checks.push(Check::equal("dilation.dimension", dil.k_dim() as f64, dil.rank_sum() as f64));
        let mut worst_rank_gap: f64 = 0.0;
        for n in 1..=dil.n_blocks() {
            if let Some(rep) = stage(&mut checks, &mut errors, &format!("dilation.rank_identity.{n}"), dil.compression_defect(n)) {
                worst_rank_gap = worst_rank_gap.max((rep.quotient_dim() - rep.defect_rank as isize).unsigned_abs() as f64);
            }
        }
        checks.push(Check::equal("dilation.rank_identity", worst_rank_gap, 0.0));
        if let Some((_, dec)) =
            stage(&mut checks, &mut errors, "dilation.block_rank", dil.block_compression(1, dil.n_blocks()))
        {
            checks.push(Check::at_most("dilation.decomposition", dec.decomposition_residual, ct));
        }
        if let Some(chain) = stage(&mut checks, &mut errors, "dilation.chain", run_chain(&drivers)) {
            let mut worst: f64 = 0.0;
            for n in 1..=dil.n_blocks() {
                if let Some((_, rep)) =
                    stage(&mut checks, &mut errors, &format!("residual_isometry.{n}"), dil.residual_isometry(&chain, n))
                {
                    worst = worst.max(rep.max());
                }
            }
            checks.push(Check::at_most("residual_isometry", worst, ct));
        }
    }

    if let Some(q) = stage(&mut checks, &mut errors, "psi", psi(p, tol)) {
        checks.push(Check::at_most("psi.normalization", q.normalization_residual(), ct));
    }
    if let Some(fp) = stage(&mut checks, &mut errors, "psi.fixed_point_agreement", is_pvm_fixed_point(p, tol)) {
        checks.push(Check::holds("psi.fixed_point_agreement", fp.fixed == fp.algebraic));
        result.insert("pvm_fixed_point".into(), json!(fp.fixed));
    }
    if p.n_originals() >= 2 {
        if let Some(orbit) = stage(&mut checks, &mut errors, "psi.second_coordinate", originals_orbit(p, LAW_STEPS)) {
            let (a1, a2) = (&p.originals()[0], &p.originals()[1]);
            let worst = orbit
                .iter()
                .enumerate()
                .map(|(m, it)| it[1].distance(&second_coordinate_law(a1, a2, m)))
                .fold(0.0, f64::max);
            checks.push(Check::at_most("psi.second_coordinate", worst, ct));
        }
    }
    if let Some(diags) = diagonals(p).filter(|_| p.terminals().is_empty()) {
        if let Some(orbit) = stage(&mut checks, &mut errors, "psi.diagonal_oracle", commuting_scalar_oracle(&diags, ORACLE_STEPS, tol)) {
            let psi_orbit = originals_orbit(p, ORACLE_STEPS).expect("same input as above");
            let mut worst: f64 = 0.0;
            for (it, want) in psi_orbit.iter().zip(&orbit.iterates) {
                for (e, w) in it.iter().zip(want) {
                    for (i, &x) in w.iter().enumerate() {
                        worst = worst.max((e.matrix()[(i, i)].re - x).abs());
                    }
                }
            }
            checks.push(Check::at_most("psi.diagonal_oracle", worst, ct));
        }
    }

    if let Some(b) = stage(&mut checks, &mut errors, "collapse", collapse_map(p, tol)) {
        if let Some(c) = stage(&mut checks, &mut errors, "collapse.predicate", is_collapsed(b.b(), b.b_esc(), tol)) {
            checks.push(Check::holds("collapse.predicate", c.collapsed));
        }
        if let Some(f) = stage(&mut checks, &mut errors, "collapse.fiber", fiber_membership(p, &b, tol)) {
            checks.push(Check::holds("collapse.fiber", f.member));
        }
        if let Some(pre) = stage(&mut checks, &mut errors, "collapse.preimage", canonical_preimage(&b, tol)) {
            if let Some(back) = stage(&mut checks, &mut errors, "collapse.preimage", collapse_map(&pre, tol)) {
                checks.push(Check::at_most("collapse.preimage", back.distance(&b), ct));
            }
        }
    }
    result.insert("errors".into(), json!(errors));
    Outcome { checks, result: Value::Object(result) }
}

pub fn psi_steps(p: &OrderedPovm, steps: usize, tol: &Tolerances) -> Result<(Outcome, PovmDocument), Error> {
    let (it, conv) = iterate_psi(p, steps, tol)?;
    let gap = gap_report(p, p.n_originals(), tol)?;
    let checks = vec![Check::at_most("psi.normalization", it.povm.normalization_residual(), tol.check_tol)];
    let doc = PovmDocument::from_povm(&it.povm);
    let result = json!({
        "steps": it.step,
        "converged": conv.converged,
        "last_step_change": conv.last_step_change,
        "final_distance": conv.final_distance(),
        "observed_ratio": conv.observed_ratio,
        "distances": conv.distances,
        "gap": {
            "epsilons": gap.epsilons,
            "predicted_rho": gap.predicted_rho,
            "gap_holds": gap.gap_holds,
        },
        "iterate": doc,
    });
    Ok((Outcome { checks, result }, doc))
}

pub fn collapse(p: &OrderedPovm, tol: &Tolerances) -> Result<(Outcome, PovmDocument), Error> {
    let b = collapse_map(p, tol)?;
    let c = b.check(tol)?;
    let f = fiber_membership(p, &b, tol)?;
    let checks = vec![
        Check::holds("collapse.predicate", c.collapsed),
        Check::at_most("collapse.normalization", c.normalization_residual, tol.check_tol),
        Check::at_most("collapse.max_commutator", c.max_commutator, tol.check_tol),
        Check::holds("collapse.fiber", f.member),
    ];
    let doc = PovmDocument::from_collapsed(&b);
    Ok((Outcome { checks, result: json!({ "collapsed": doc }) }, doc))
}

pub fn dilate(p: &OrderedPovm, tol: &Tolerances) -> Result<Outcome, Error> {
    let drivers = recover_contractions(p, tol)?;
    let dil = build_dilation(&drivers, tol)?;
    let r = dil.residuals();
    let ct = tol.check_tol;
    let mut checks = vec![
        Check::at_most("dilation.isometry", r.isometry, ct),
        Check::at_most("dilation.extraction", r.extraction, ct),
        Check::at_most("dilation.tail", r.tail, ct),
        Check::equal("dilation.dimension", dil.k_dim() as f64, dil.rank_sum() as f64),
    ];
    let mut steps = Vec::new();
    for n in 1..=dil.n_blocks() {
        match dil.compression_defect(n) {
            Ok(rep) => {
                checks.push(Check::equal(format!("rank_identity.{n}"), rep.quotient_dim() as f64, rep.defect_rank as f64));
                steps.push(json!({
                    "step": n,
                    "defect_rank": rep.defect_rank,
                    "quotient_dim": rep.quotient_dim(),
                    "dim_tail_before": rep.dim_m_prev,
                    "dim_tail_after": rep.dim_m_next,
                    "dim_intersection": rep.dim_intersection,
                }));
            }
            Err(e) => {
                checks.push(Check::holds(format!("rank_identity.{n}"), false));
                steps.push(json!({ "step": n, "error": e.to_string() }));
            }
        }
    }
    let result = json!({
        "dilation_dim": dil.k_dim(),
        "block_sizes": dil.blocks().iter().map(|b| b.size).collect::<Vec<_>>(),
        "identities": {
            "isometry": r.isometry,
            "extraction": r.extraction,
            "tail": r.tail,
        },
        "steps": steps,
    });
    Ok(Outcome { checks, result })
}

pub fn fiber(p: &OrderedPovm, b: &CollapsedPovm, tol: &Tolerances) -> Result<Outcome, Error> {
    let f = fiber_membership(p, b, tol)?;
    let checks = vec![
        Check::at_most("fiber.max_gap", f.max_gap(), tol.check_tol),
        Check::holds("fiber.member", f.member),
    ];
    let result = json!({
        "member": f.member,
        "kernel_gaps": f.kernel_gaps,
        "compression_gaps": f.compression_gaps,
        "collapse_distance": f.collapse_distance,
    });
    Ok(Outcome { checks, result })
}

pub fn couple(b: &CollapsedPovm, c: &Matrix, x: &Matrix, tol: &Tolerances) -> Result<(Outcome, PovmDocument), Error> {
    let spec = CouplingSpec { c_block: c.clone(), x_block: x.clone() };
    let p = couple_fiber(b, &spec, tol)?;
    let f = fiber_membership(&p, b, tol)?;
    let checks = vec![
        Check::at_most("couple.normalization", p.normalization_residual(), tol.check_tol),
        Check::holds("couple.fiber", f.member),
    ];
    let doc = PovmDocument::from_povm(&p);
    let result = json!({
        "c": MatrixDocument::from_matrix(c),
        "x": MatrixDocument::from_matrix(x),
        "coupled": doc,
    });
    Ok((Outcome { checks, result }, doc))
}

/// Identities of the escape polynomials for every level up to `levels`,
/// and, given a collapsed POVM, the two-path and decay checks on it.
pub fn postcollapse(levels: usize, b: Option<&CollapsedPovm>, tol: &Tolerances) -> Result<Outcome, Error> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for m in 0..=levels.min(LEVEL_CAP) {
        let f = poly_family(m)?;
        let closed = closed_forms(m);
        checks.push(Check::holds(format!("poly.{m}.sum_identity"), f.sum_defect().is_zero()));
        checks.push(Check::holds(format!("poly.{m}.closed_forms"), f.polys()[..closed.len()] == closed[..]));
        checks.push(Check::holds(format!("poly.{m}.nonnegative_grid"), f.nonnegative_on_grid()));
        rows.push(json!({
            "level": m,
            "arithmetic": "exact",
            "degrees": f.polys().iter().map(|p| p.degree().unwrap_or(0)).collect::<Vec<_>>(),
            "max_coefficient_bits": f.polys().iter().map(|p| p.max_coeff_bits()).max(),
        }));
    }
    if levels > LEVEL_CAP {
        for m in LEVEL_CAP + 1..=levels {
            checks.push(Check::holds(format!("poly.{m}.closed_forms"), prefix_family(m, 2) == closed_forms(m)));
        }
        for lvl in check_levels_mod_prime(LEVEL_CAP + 1..=levels) {
            checks.push(Check::holds(format!("poly.{}.sum_identity_mod_prime", lvl.level), lvl.sum_identity));
            checks.push(Check::holds(
                format!("poly.{}.closed_forms_mod_prime", lvl.level),
                lvl.first_closed_form && lvl.second_closed_form,
            ));
            rows.push(json!({
                "level": lvl.level,
                "arithmetic": format!("mod {PRIME}"),
                "top_degree": lvl.top_degree,
                "points": lvl.points,
            }));
        }
    }
    let mut result = json!({ "levels": rows, "exact_level_cap": LEVEL_CAP });
    if let Some(b) = b {
        let mut worst: f64 = 0.0;
        for m in 0..=levels.min(LEVEL_CAP) {
            worst = worst.max(psi_on_collapsed_equivalence(b, m, tol)?.max_distance);
        }
        checks.push(Check::at_most("escape.two_paths", worst, tol.check_tol));
        let mut decay = Vec::new();
        match decay_check(b.b_esc(), 1, levels, tol) {
            Err(Error::SpectralMassAtOne { max_eigenvalue }) => {
                decay.push(json!({ "skipped": "escape effect has spectral mass at one", "max_eigenvalue": max_eigenvalue }));
            }
            other => {
                other?;
                for j in 1..=3.min(levels + 1) {
                    let rep = decay_check(b.b_esc(), j, levels, tol)?;
                    checks.push(Check::holds(format!("escape.decay.{j}"), rep.holds));
                    decay.push(json!({
                        "j": j,
                        "rho": rep.rho,
                        "norms": rep.rows.iter().map(|r| r.norm).collect::<Vec<_>>(),
                        "envelopes": rep.rows.iter().map(|r| r.envelope).collect::<Vec<_>>(),
                    }));
                }
            }
        }
        result["decay"] = json!(decay);
    }
    Ok(Outcome { checks, result })
}
