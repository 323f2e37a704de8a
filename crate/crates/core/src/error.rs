use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node index {index} out of range for grid with {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("{0} requires a curvature tag on the grid")]
    MissingCurvature(&'static str),

    #[error("{check} does not support model `{model}`")]
    UnsupportedModel { check: &'static str, model: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what))
    }
}
