//! Small exact-fraction instances with hand-checkable collapse data.

use alloc::vec;
use alloc::vec::Vec;

use crate::collapse::CollapsedPovm;
use crate::linalg::{Effect, Matrix};
use crate::povm::{Label, OrderedPovm};
use crate::tol::Tolerances;

fn real(rows: &[&[f64]]) -> Effect {
    Effect::from_matrix(Matrix::from_real_rows(rows)).expect("fixture entries form an effect")
}

fn diag(d: &[f64]) -> Effect {
    Effect::from_real_diag(d).expect("fixture entries form an effect")
}

/// Three non-commuting qubit effects: `diag(2/5, 0)`,
/// `[[1/10, 1/10], [1/10, 3/10]]` and the completion `I − A_1 − A_2`.
pub fn noncommuting_qubit() -> OrderedPovm {
    let effects = vec![
        diag(&[0.4, 0.0]),
        real(&[&[0.1, 0.1], &[0.1, 0.3]]),
        real(&[&[0.5, -0.1], &[-0.1, 0.7]]),
    ];
    OrderedPovm::from_originals(effects, &Tolerances::default()).expect("normalized")
}

/// Collapse of [`noncommuting_qubit`]: `diag(2/5, 0)`, `diag(0, 3/10)`, `0`
/// with escape `diag(3/5, 7/10)`.
pub fn noncommuting_qubit_collapsed() -> CollapsedPovm {
    CollapsedPovm::new(
        vec![diag(&[0.4, 0.0]), diag(&[0.0, 0.3]), Effect::zeros(2)],
        diag(&[0.6, 0.7]),
        &Tolerances::default(),
    )
    .expect("collapsed")
}

/// Two different POVMs with the same collapse: `(½P_1, ½P_2, ½I)` and
/// `(½P_1, [[¼, ¼], [¼, ½]], [[¼, −¼], [−¼, ½]])`.
pub fn diagonal_fiber_pair() -> (OrderedPovm, OrderedPovm) {
    let tol = Tolerances::default();
    let a = OrderedPovm::from_originals(vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5]), diag(&[0.5, 0.5])], &tol)
        .expect("normalized");
    let a_prime = OrderedPovm::from_originals(
        vec![
            diag(&[0.5, 0.0]),
            real(&[&[0.25, 0.25], &[0.25, 0.5]]),
            real(&[&[0.25, -0.25], &[-0.25, 0.5]]),
        ],
        &tol,
    )
    .expect("normalized");
    (a, a_prime)
}

/// `(½P_1, ½P_2, 0 | ½I)`, the common collapse of [`diagonal_fiber_pair`].
pub fn diagonal_fiber_collapsed() -> CollapsedPovm {
    CollapsedPovm::new(
        vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5]), Effect::zeros(2)],
        diag(&[0.5, 0.5]),
        &Tolerances::default(),
    )
    .expect("collapsed")
}

/// The one-dimensional POVM `(1/2, 1/2)`.
pub fn scalar_halves() -> OrderedPovm {
    OrderedPovm::from_originals(vec![diag(&[0.5]), diag(&[0.5])], &Tolerances::default()).expect("normalized")
}

/// `(1/2, 0 | 1/2)`, the collapse of [`scalar_halves`].
pub fn scalar_halves_collapsed() -> CollapsedPovm {
    CollapsedPovm::new(vec![diag(&[0.5]), diag(&[0.0])], diag(&[0.5]), &Tolerances::default()).expect("collapsed")
}

/// `A_1 = diag(1, 1/2, …, 1/d)`, `A_2 = I − A_1`. The second coordinate
/// evolves as `(I − A_1)^{m+1}`, whose norm `(1 − 1/d)^{m+1}` decays ever more
/// slowly as `d` grows.
pub fn harmonic_truncation(d: usize) -> OrderedPovm {
    let a1: Vec<f64> = (1..=d).map(|n| 1.0 / n as f64).collect();
    let a2: Vec<f64> = a1.iter().map(|x| 1.0 - x).collect();
    OrderedPovm::from_originals(vec![diag(&a1), diag(&a2)], &Tolerances::default()).expect("normalized")
}

/// Labels of a collapsed document: originals, then the escape as `term:1`.
pub fn collapsed_labels(n: usize) -> Vec<Label> {
    let mut l: Vec<Label> = (1..=n).map(Label::Original).collect();
    l.push(Label::Terminal(1));
    l
}
