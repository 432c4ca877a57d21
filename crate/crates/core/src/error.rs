use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported size: {what} is {got}, maximum is {max}")]
    UnsupportedSize {
        what: &'static str,
        got: usize,
        max: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(
        "covariance matrix ill-conditioned after jitter escalation; \
         inputs {first} and {second} are near duplicates"
    )]
    IllConditioned { first: usize, second: usize },

    #[error("degenerate update: posterior variance at the new point is {variance:e} with zero noise")]
    DegenerateUpdate { variance: f64 },

    #[error("evaluation failed at x = {x:?}: {message}")]
    Evaluation { x: Vec<f64>, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
