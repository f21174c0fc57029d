use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit reports. The variants map one-to-one onto the
/// command-line exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("query outside interpolation hull: {0}")]
    Extrapolation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("dataset kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("training diverged at epoch {epoch}: {detail}")]
    TrainingDiverged { epoch: usize, detail: String },

    #[error("corrupt data in {location}: {detail}")]
    Corruption { location: String, detail: String },

    #[error("unsupported format version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },

    #[error("format error: {0}")]
    Format(String),

    #[error("checkpoint integrity error: {0}")]
    Integrity(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn corrupt(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Corruption {
            location: location.into(),
            detail: detail.into(),
        }
    }

    /// Process exit code: 2 for usage, parameter and structural problems,
    /// 3 for I/O and on-disk corruption. (1 is reserved for a failed
    /// validation, which is not an error.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Corruption { .. }
            | Error::Version { .. }
            | Error::Format(_)
            | Error::Integrity(_) => 3,
            _ => 2,
        }
    }
}
