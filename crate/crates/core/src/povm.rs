use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Effect, Matrix};
use crate::tol::Tolerances;

/// Coordinate tag: an original outcome `k ≥ 1`, or the terminal outcome
/// appended by the residual transform at creation step `i ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Original(usize),
    Terminal(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Original(k) => write!(f, "orig:{k}"),
            Label::Terminal(i) => write!(f, "term:{i}"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidLabels(format!("cannot parse label {s:?} (expected orig:k or term:i)"));
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx: usize = idx.parse().map_err(|_| bad())?;
        if idx == 0 {
            return Err(bad());
        }
        match kind {
            "orig" => Ok(Label::Original(idx)),
            "term" => Ok(Label::Terminal(idx)),
            _ => Err(bad()),
        }
    }
}

/// Ordered effects summing to the identity: originals `1..=n` first, then
/// terminal coordinates in creation order.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedPovm {
    dim: usize,
    effects: Vec<Effect>,
    labels: Vec<Label>,
    n_originals: usize,
}

impl OrderedPovm {
    pub fn new(effects: Vec<Effect>, labels: Vec<Label>, tol: &Tolerances) -> Result<Self> {
        let first = effects.first().ok_or(Error::Empty("an ordered POVM needs at least one effect"))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::Empty("the Hilbert space must have positive dimension"));
        }
        for e in &effects {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
            }
        }
        if labels.len() != effects.len() {
            return Err(Error::InvalidLabels(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        let n_originals = check_labels(&labels)?;
        let p = Self { dim, effects, labels, n_originals };
        let residual = p.normalization_residual();
        if !(residual <= tol.check_tol) {
            return Err(Error::NotNormalized { residual });
        }
        Ok(p)
    }

    /// All coordinates labelled as originals `1..=n`.
    pub fn from_originals(effects: Vec<Effect>, tol: &Tolerances) -> Result<Self> {
        let labels = (1..=effects.len()).map(Label::Original).collect();
        Self::new(effects, labels, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn originals(&self) -> &[Effect] {
        &self.effects[..self.n_originals]
    }

    pub fn terminals(&self) -> &[Effect] {
        &self.effects[self.n_originals..]
    }

    pub fn n_originals(&self) -> usize {
        self.n_originals
    }

    /// Creation step of the most recent terminal, zero if there is none.
    pub fn last_terminal_step(&self) -> usize {
        match self.labels.last() {
            Some(Label::Terminal(i)) => *i,
            _ => 0,
        }
    }

    pub fn effect(&self, label: Label) -> Option<&Effect> {
        self.labels.iter().position(|l| *l == label).map(|i| &self.effects[i])
    }

    /// Frobenius norm of `Σ effects − I`.
    pub fn normalization_residual(&self) -> f64 {
        normalization_residual(self.dim, &self.effects)
    }

    pub fn into_parts(self) -> (Vec<Effect>, Vec<Label>) {
        (self.effects, self.labels)
    }
}

pub(crate) fn normalization_residual(dim: usize, effects: &[Effect]) -> f64 {
    let mut acc = Matrix::identity(dim).scale(-1.0);
    for e in effects {
        acc = &acc + e.matrix();
    }
    acc.frobenius_norm()
}

/// Validates the label discipline and returns the number of originals.
fn check_labels(labels: &[Label]) -> Result<usize> {
    let mut n_orig = 0;
    let mut last_term = 0;
    for (pos, l) in labels.iter().enumerate() {
        match *l {
            Label::Original(k) => {
                if last_term > 0 {
                    return Err(Error::InvalidLabels(format!(
                        "original label {l} at position {pos} follows a terminal label"
                    )));
                }
                if k != n_orig + 1 {
                    return Err(Error::InvalidLabels(format!(
                        "original labels must run 1, 2, …; found {l} at position {pos}"
                    )));
                }
                n_orig = k;
            }
            Label::Terminal(i) => {
                if i <= last_term {
                    return Err(Error::InvalidLabels(format!(
                        "terminal labels must increase; found {l} after term:{last_term}"
                    )));
                }
                last_term = i;
            }
        }
    }
    Ok(n_orig)
}

pub fn labels_to_strings(labels: &[Label]) -> Vec<String> {
    labels.iter().map(|l| l.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves() -> Vec<Effect> {
        alloc::vec![Effect::from_real_diag(&[0.5]).unwrap(), Effect::from_real_diag(&[0.5]).unwrap()]
    }

    #[test]
    fn label_round_trip() {
        for l in [Label::Original(3), Label::Terminal(12)] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        assert!("orig:0".parse::<Label>().is_err());
        assert!("final:1".parse::<Label>().is_err());
        assert!("orig".parse::<Label>().is_err());
    }

    #[test]
    fn accepts_originals_then_terminals() {
        let tol = Tolerances::default();
        let p = OrderedPovm::new(halves(), alloc::vec![Label::Original(1), Label::Terminal(2)], &tol).unwrap();
        assert_eq!(p.n_originals(), 1);
        assert_eq!(p.terminals().len(), 1);
        assert_eq!(p.last_terminal_step(), 2);
    }

    #[test]
    fn rejects_bad_label_orders() {
        let tol = Tolerances::default();
        for labels in [
            alloc::vec![Label::Terminal(1), Label::Original(1)],
            alloc::vec![Label::Original(2), Label::Original(1)],
            alloc::vec![Label::Original(1), Label::Original(1)],
            alloc::vec![Label::Original(1)],
        ] {
            assert!(matches!(OrderedPovm::new(halves(), labels, &tol), Err(Error::InvalidLabels(_))));
        }
        let mut terms = halves();
        terms.push(Effect::zeros(1));
        let labels = alloc::vec![Label::Original(1), Label::Terminal(2), Label::Terminal(2)];
        assert!(matches!(OrderedPovm::new(terms, labels, &tol), Err(Error::InvalidLabels(_))));
    }

    #[test]
    fn rejects_unnormalized() {
        let tol = Tolerances::default();
        let effects = alloc::vec![Effect::from_real_diag(&[0.5]).unwrap()];
        assert!(matches!(OrderedPovm::from_originals(effects, &tol), Err(Error::NotNormalized { .. })));
        assert!(matches!(OrderedPovm::from_originals(Vec::new(), &tol), Err(Error::Empty(_))));
    }
}
