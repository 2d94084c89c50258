use thiserror::Error;

/// Errors raised by operators, penalties, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected length {expected}, got {actual}")]
    DimensionMismatch { context: &'static str, expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("entropy undefined at origin (all-zero vector)")]
    ZeroVector,

    #[error("relative error undefined: reference signal is zero")]
    ZeroReference,

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last relative change {last_change:.3e}); pass an explicit kappa"
    )]
    KappaNotConverged { iterations: usize, last_change: f64 },

    #[error("operator kind {0} has no reproducible manifest")]
    NotSerializable(&'static str),

    #[error("image format error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { context, expected, actual });
    }
    Ok(())
}
