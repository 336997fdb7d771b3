use thiserror::Error;

use crate::cubature::SolveOutcome;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("non-finite state at step {step}, coordinate {coord}")]
    NonFinite { step: usize, coord: usize },

    #[error(
        "no candidate met the residual threshold {threshold:.1e} (best max relative residual {:.3e})",
        best.max_relative
    )]
    Solver { threshold: f64, best: Box<SolveOutcome> },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
