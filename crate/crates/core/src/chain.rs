use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{psd_pinv_sqrt, psd_sqrt, Effect, HermMatrix, Matrix};
use crate::povm::OrderedPovm;
use crate::tol::Tolerances;

/// Slack on the spectrum of a recovered contraction before it is clamped.
pub const RECOVERY_SLACK: f64 = 1e-8;

/// Outcome of the residual recursion
/// `T_n = R_{n-1}^{1/2} A_n R_{n-1}^{1/2}`, `R_n = R_{n-1}^{1/2} (I - A_n) R_{n-1}^{1/2}`.
#[derive(Clone, Debug)]
pub struct ResidualChain {
    /// `T_1, …, T_N`.
    pub extracted: Vec<Effect>,
    /// `R_0 = I, R_1, …, R_N`.
    pub residuals: Vec<Effect>,
    /// `R_0^{1/2}, …, R_{N-1}^{1/2}`, the roots actually used at each step.
    pub roots: Vec<Effect>,
}

impl ResidualChain {
    pub fn dim(&self) -> usize {
        self.residuals[0].dim()
    }

    pub fn len(&self) -> usize {
        self.extracted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extracted.is_empty()
    }

    pub fn final_residual(&self) -> &Effect {
        self.residuals.last().expect("chain always holds R_0")
    }

    /// `‖Σ T_n + R_N − I‖_F`.
    pub fn partition_residual(&self) -> f64 {
        let d = self.dim();
        let mut acc = &self.final_residual().matrix().clone() - &Matrix::identity(d);
        for t in &self.extracted {
            acc = &acc + t.matrix();
        }
        acc.frobenius_norm()
    }

    /// `max_n ‖R_n − (R_{n-1} − T_n)‖_F`.
    pub fn step_residual(&self) -> f64 {
        (0..self.len())
            .map(|n| {
                let want = self.residuals[n].matrix() - self.extracted[n].matrix();
                self.residuals[n + 1].matrix().distance(&want)
            })
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `R_{n-1} − R_n` over all steps; nonnegative
    /// when the residuals decrease.
    pub fn monotonicity_margin(&self) -> f64 {
        (0..self.len())
            .map(|n| self.residuals[n].herm().sub(self.residuals[n + 1].herm()).eigen().min())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs the residual recursion over `drivers`, which need not sum to `I`.
pub fn run_chain(drivers: &[Effect]) -> Result<ResidualChain> {
    let first = drivers.first().ok_or(Error::Empty("the residual chain needs at least one driver"))?;
    let d = first.dim();
    for a in drivers {
        if a.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
        }
    }
    let mut residuals = Vec::with_capacity(drivers.len() + 1);
    let mut extracted = Vec::with_capacity(drivers.len());
    let mut roots = Vec::with_capacity(drivers.len());
    residuals.push(Effect::identity(d));
    for a in drivers {
        let prev = residuals.last().expect("nonempty");
        let root = psd_sqrt(prev);
        // Diagonal steps multiply entrywise, which keeps dyadic inputs exact.
        let (t, rest) = match (prev.matrix().real_diagonal(), a.matrix().real_diagonal()) {
            (Some(r), Some(x)) => (
                Matrix::from_real_diag(&r.iter().zip(&x).map(|(r, x)| r * x).collect::<Vec<_>>()),
                Matrix::from_real_diag(&r.iter().zip(&x).map(|(r, x)| r * (1.0 - x)).collect::<Vec<_>>()),
            ),
            _ => {
                let r = root.matrix();
                (&(r * a.matrix()) * r, &(r * a.complement().matrix()) * r)
            }
        };
        extracted.push(Effect::from_computed(&t)?);
        residuals.push(Effect::from_computed(&rest)?);
        roots.push(root);
    }
    Ok(ResidualChain { extracted, residuals, roots })
}

/// Recovers driving contractions `A_n` with `T_n = R_{n-1}^{1/2} A_n R_{n-1}^{1/2}`.
///
/// Off the support of `R_{n-1}` the contraction is not determined by the
/// POVM; this returns the zero extension there.
pub fn recover_contractions(povm: &OrderedPovm, tol: &Tolerances) -> Result<Vec<Effect>> {
    let d = povm.dim();
    let mut residual = HermMatrix::identity(d);
    let mut out = Vec::with_capacity(povm.len());
    for (i, t) in povm.effects().iter().enumerate() {
        let step = i + 1;
        let gap = residual.sub(t.herm()).eigen().min();
        if gap < -tol.check_tol {
            return Err(Error::FactorizationViolation {
                step,
                reason: format!("T_n exceeds R_(n-1) (min eigenvalue of the difference {gap:e})"),
            });
        }
        let pinv = psd_pinv_sqrt(&residual, tol)?;
        let a = t.herm().congruence(pinv.matrix());
        let eig = a.eigen();
        if eig.min() < -RECOVERY_SLACK || eig.max() > 1.0 + RECOVERY_SLACK {
            return Err(Error::FactorizationViolation {
                step,
                reason: format!("recovered contraction has spectrum [{:e}, {:e}]", eig.min(), eig.max()),
            });
        }
        out.push(Effect::from_computed(&eig.reassemble(|l| l.clamp(0.0, 1.0)))?);
        residual = residual.sub(t.herm());
    }
    Ok(out)
}

/// Scalar form of the recursion: `t_k = a_k ∏_{j<k} (1 − a_j)`.
pub fn scalar_extracted(drivers: &[f64]) -> Vec<f64> {
    let mut keep = 1.0;
    drivers
        .iter()
        .map(|&a| {
            let t = a * keep;
            keep *= 1.0 - a;
            t
        })
        .collect()
}
