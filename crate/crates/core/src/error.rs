use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate region: no sample landed in the region after {rejections} rejections")]
    DegenerateRegion { rejections: u64 },

    #[error("norm of monomial z^{alpha:?} diverges on the region")]
    DivergedNorm { alpha: Vec<u32> },

    #[error("Gram system is ill-conditioned: estimated condition {condition:.3e} exceeds cap {cap:.1e} ({free} free coefficients)")]
    Conditioning { condition: f64, cap: f64, free: usize },

    #[error("G(0) is infinite: the minimal integral on the whole domain diverges")]
    G0Infinite,

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    #[error("{field} is not negative on the domain (sup = {sup:.6})")]
    NonNegativeWeight { field: String, sup: f64 },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
