use alloc::string::String;

/// Failure modes shared across the crate.
///
/// Variants that carry a measured value report it so callers can print the
/// size of the violation, not just its kind.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("operator is not an effect (spectrum [{min_eigenvalue:e}, {max_eigenvalue:e}])")]
    NotEffect { min_eigenvalue: f64, max_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("effects do not sum to the identity (residual {residual:e})")]
    NotNormalized { residual: f64 },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("factorization fails at step {step}: {reason}")]
    FactorizationViolation { step: usize, reason: String },
    #[error("residual chain is not exhaustive (final residual norm {residual_norm:e})")]
    ChainNotExhaustive { residual_norm: f64 },
    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("rank identity fails at step {step}: quotient dimension {quotient_dim} vs defect rank {defect_rank}")]
    RankIdentityViolation { step: usize, quotient_dim: isize, defect_rank: usize },
    #[error("isometry check fails (residual {residual:e})")]
    IsometryViolation { residual: f64 },
    #[error("collapse invariant fails: {0}")]
    CollapseInvariantViolation(String),
    #[error("POVM is not collapsed: {0}")]
    NotCollapsed(String),
    #[error("coupling is infeasible (min block eigenvalue {min_eigenvalue:e})")]
    InfeasibleCoupling { min_eigenvalue: f64 },
    #[error("polynomial level {level} exceeds the cap {cap}")]
    LevelTooLarge { level: usize, cap: usize },
    #[error("effect has spectral mass at one (largest eigenvalue {max_eigenvalue:e})")]
    SpectralMassAtOne { max_eigenvalue: f64 },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(&'static str),
    #[error("cross-check disagrees: {0}")]
    CrossCheckFailed(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
