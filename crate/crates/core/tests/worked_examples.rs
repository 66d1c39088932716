use residua_core::collapse::{collapse_map, couple_fiber, fiber_membership, CouplingSpec};
use residua_core::fixtures::*;
use residua_core::linalg::{Effect, Matrix};
use residua_core::postcollapse::{decay_check, psi_on_collapsed_equivalence};
use residua_core::transform::{gap_report, is_pvm_fixed_point, iterate_originals, psi};
use residua_core::Tolerances;

#[test]
fn noncommuting_qubit_collapses_to_diagonal() {
    let tol = Tolerances::default();
    let b = collapse_map(&noncommuting_qubit(), &tol).unwrap();
    assert!(b.distance(&noncommuting_qubit_collapsed()) < 1e-12);
    for k in 0..2 {
        let bk = b.b()[k].matrix();
        let lhs = bk * b.b_esc().matrix();
        assert!(lhs.distance(&(bk - &(bk * bk))) < 1e-12);
    }
    assert!(!is_pvm_fixed_point(&noncommuting_qubit(), &tol).unwrap().fixed);
}

#[test]
fn noncommuting_qubit_first_step() {
    let tol = Tolerances::default();
    let q = psi(&noncommuting_qubit(), &tol).unwrap();
    let c = 0.6f64.sqrt() / 10.0;
    let want = Effect::from_matrix(Matrix::from_real_rows(&[&[0.06, c], &[c, 0.3]])).unwrap();
    assert!(q.effects()[1].distance(&want) < 1e-15);
}

#[test]
fn noncommuting_qubit_gaps_and_rate() {
    let tol = Tolerances::default();
    let g = gap_report(&noncommuting_qubit(), 3, &tol).unwrap();
    assert!((g.epsilons[0].1 - 0.4).abs() < 1e-12);
    assert!((g.epsilons[1].1 - 0.3).abs() < 1e-12);
    assert!((g.coordinate_rho(2).unwrap() - 0.6f64.sqrt()).abs() < 1e-12);
    assert!((g.predicted_rho - 0.7f64.sqrt()).abs() < 1e-12);

    let (_, rep) = iterate_originals(&noncommuting_qubit(), 80, &tol).unwrap();
    assert!(rep.final_distance() < 1e-8);
    let d2 = rep.coordinate(2);
    for m in 10..d2.len() - 1 {
        assert!(d2[m + 1] / d2[m] <= 0.6f64.sqrt() + 0.05);
    }
}

#[test]
fn fiber_pair_shares_collapse() {
    let tol = Tolerances::default();
    let (a, a_prime) = diagonal_fiber_pair();
    assert_ne!(a, a_prime);
    let target = diagonal_fiber_collapsed();
    assert!(collapse_map(&a, &tol).unwrap().distance(&target) < 1e-12);
    assert!(collapse_map(&a_prime, &tol).unwrap().distance(&target) < 1e-12);
    assert!(fiber_membership(&a_prime, &collapse_map(&a, &tol).unwrap(), &tol).unwrap().member);

    let spec = CouplingSpec {
        c_block: Matrix::from_real_rows(&[&[0.25]]),
        x_block: Matrix::from_real_rows(&[&[0.25]]),
    };
    let built = couple_fiber(&target, &spec, &tol).unwrap();
    for (x, y) in built.originals().iter().zip(a_prime.effects()) {
        assert!(x.distance(y) < 1e-15);
    }
}

#[test]
fn scalar_halves_dynamics() {
    let tol = Tolerances::default();
    let (_, rep) = iterate_originals(&scalar_halves(), 50, &tol).unwrap();
    for (m, d) in rep.coordinate(2).iter().enumerate() {
        let want = 2f64.powi(-(m as i32) - 1);
        assert!((d - want).abs() <= 4.0 * f64::EPSILON * want);
    }
    let b = collapse_map(&scalar_halves(), &tol).unwrap();
    assert!(b.distance(&scalar_halves_collapsed()) == 0.0);
    let q = psi(&b.to_ordered(&tol).unwrap(), &tol).unwrap();
    let got: Vec<f64> = q.effects().iter().map(|e| e.matrix()[(0, 0)].re).collect();
    assert_eq!(got, vec![0.5, 0.0, 0.25, 0.25]);
}

#[test]
fn escape_polynomials_on_noncommuting_qubit() {
    let tol = Tolerances::default();
    let b = noncommuting_qubit_collapsed();
    for m in 0..=8 {
        assert!(psi_on_collapsed_equivalence(&b, m, &tol).unwrap().max_distance <= 1e-10);
    }
    for j in 1..=3 {
        assert!(decay_check(b.b_esc(), j, 12, &tol).unwrap().holds);
    }
}

#[test]
fn harmonic_truncation_decays_slowly() {
    let tol = Tolerances::default();
    let g = gap_report(&harmonic_truncation(20), 2, &tol).unwrap();
    assert!((g.epsilons[0].1 - 1.0 / 20.0).abs() < 1e-12);
}
