use thiserror::Error;

/// Errors produced by the choquard crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonzero field required")]
    ZeroField,

    #[error("nonlocal energy vanished; iterate collapsed to zero")]
    Collapse,

    #[error("no convergence after {iterations} iterations (relative gradient {gradient:.3e})")]
    NonConvergence { iterations: usize, gradient: f64 },

    #[error("signed orbit sum is undefined: {0}")]
    ThetaUndefined(String),

    #[error("out of range: {0}")]
    RangeViolation(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
