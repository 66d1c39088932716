use crate::error::{Error, Result};

/// Numerical thresholds used throughout the crate.
///
/// `rank_tol` and `kernel_tol` are relative to the largest eigenvalue
/// magnitude with a floor of one; `conv_tol` and `check_tol` are absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub kernel_tol: f64,
    pub conv_tol: f64,
    pub check_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-9,
            kernel_tol: 1e-9,
            conv_tol: 1e-10,
            check_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn new(rank_tol: f64, kernel_tol: f64, conv_tol: f64, check_tol: f64) -> Result<Self> {
        let t = Self { rank_tol, kernel_tol, conv_tol, check_tol };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.rank_tol) {
            return Err(Error::InvalidTolerances("rank_tol must be finite and positive"));
        }
        if !ok(self.kernel_tol) {
            return Err(Error::InvalidTolerances("kernel_tol must be finite and positive"));
        }
        if !ok(self.conv_tol) {
            return Err(Error::InvalidTolerances("conv_tol must be finite and positive"));
        }
        if !ok(self.check_tol) {
            return Err(Error::InvalidTolerances("check_tol must be finite and positive"));
        }
        Ok(())
    }

    /// Threshold below which an eigenvalue of a spectrum with the given
    /// largest magnitude counts as zero for kernel purposes.
    pub(crate) fn kernel_threshold(&self, scale: f64) -> f64 {
        self.kernel_tol * scale.max(1.0)
    }

    pub(crate) fn rank_threshold(&self, scale: f64) -> f64 {
        self.rank_tol * scale.max(1.0)
    }
}
