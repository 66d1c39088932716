//! The exact-fraction instances shipped under `fixtures/`, rendered by the
//! document writer. The committed files must equal this output byte for byte.

use residua_core::fixtures as fx;
use residua_core::linalg::Matrix;

use crate::doc::{MatrixDocument, PovmDocument};
use crate::json::to_text;

pub fn committed() -> Vec<(&'static str, String)> {
    let (a, a_prime) = fx::diagonal_fiber_pair();
    let quarter = Matrix::from_real_rows(&[&[0.25]]);
    vec![
        ("noncommuting_qubit.json", PovmDocument::from_povm(&fx::noncommuting_qubit()).to_text()),
        ("noncommuting_qubit_collapsed.json", PovmDocument::from_collapsed(&fx::noncommuting_qubit_collapsed()).to_text()),
        ("fiber_a.json", PovmDocument::from_povm(&a).to_text()),
        ("fiber_a_prime.json", PovmDocument::from_povm(&a_prime).to_text()),
        ("fiber_collapsed.json", PovmDocument::from_collapsed(&fx::diagonal_fiber_collapsed()).to_text()),
        ("fiber_c.json", to_text(&MatrixDocument::from_matrix(&quarter))),
        ("fiber_x.json", to_text(&MatrixDocument::from_matrix(&quarter))),
        ("scalar_halves.json", PovmDocument::from_povm(&fx::scalar_halves()).to_text()),
        ("scalar_halves_collapsed.json", PovmDocument::from_collapsed(&fx::scalar_halves_collapsed()).to_text()),
    ]
}
