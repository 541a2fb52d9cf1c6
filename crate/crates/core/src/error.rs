use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate variance: sum of squares {sum_sq} does not exceed {threshold}")]
    DegenerateVariance { sum_sq: f64, threshold: f64 },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved_error}")]
    Quadrature { estimate: f64, achieved_error: f64 },

    #[error("divergent expectation: {0}")]
    Divergence(String),

    #[error("sampler fault in chain {chain} at iteration {iteration}: {message}")]
    SamplerFault {
        chain: usize,
        iteration: usize,
        message: String,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("report incomplete, missing: {}", missing.join(", "))]
    IncompleteReport { missing: Vec<String> },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in the filesystem or input data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Schema(_) | Error::Validation(_)
        )
    }
}
