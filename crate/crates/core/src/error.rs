use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("quadrature did not reach tolerance {tol:e} (achieved bound {achieved:e})")]
    Tolerance { tol: f64, achieved: f64 },

    #[error("capacity exceeded: {what} (complete up to horizon {reached})")]
    Capacity { what: String, reached: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("ill-conditioned: {0}")]
    Conditioning(String),

    #[error("pole at s = 1")]
    Pole,

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("horizon {have} is insufficient, need at least {need}")]
    Horizon { have: f64, need: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
