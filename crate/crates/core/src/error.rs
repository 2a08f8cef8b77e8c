use thiserror::Error;

/// Errors raised by grid construction, kernel evaluation and the operators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown catalog id `{0}`")]
    UnknownCatalog(String),

    #[error("kernel evaluated at the origin")]
    Singularity,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("symbol `{id}` does not have zero mean on the sphere (|integral| = {residual:e})")]
    NonZeroMean { id: String, residual: f64 },

    #[error("truncation radius {t} is below the grid spacing {h}")]
    RadiusBelowSpacing { t: f64, h: f64 },

    #[error("radius ladder is empty")]
    EmptyLadder,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("field `{0}` is not smooth enough for this check")]
    NotSmooth(String),

    #[error("test function does not vanish near the box boundary (max boundary value {0:e})")]
    NotCompactlySupported(f64),

    #[error("no oracle registered for {0}")]
    NoOracle(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
