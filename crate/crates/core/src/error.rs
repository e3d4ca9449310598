use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("truncation dimension {dim} too small: {reason}")]
    CutoffTooSmall { dim: usize, reason: String },

    #[error("invalid code parameters: {0}")]
    InvalidParameter(String),

    #[error("invalid noise point: {0}")]
    InvalidNoise(String),

    #[error("invalid recovery map: {0}")]
    InvalidRecovery(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("noisy encoding has empty output support")]
    EmptySupport,

    #[error("invalid noise grid: {0}")]
    InvalidGrid(String),

    #[error("invalid sweep configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(err.to_string())
        }
    }
}
