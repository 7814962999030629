use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// `is_data_error` separates problems with inputs (exit code 2 in the CLI)
/// from everything else.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o: {0}")]
    Stream(#[from] std::io::Error),

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("malformed entry: {0}")]
    Parse(String),

    #[error("unknown document: {0}")]
    UnknownDocument(String),

    #[error("unknown term(s): {}", .0.join(", "))]
    UnknownTerms(Vec<String>),

    #[error("query must contain at least one term")]
    EmptyQuery,

    #[error("relevant document set must not be empty")]
    EmptyRelevantSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index cache: {0}")]
    Cache(String),

    #[error("operation `{operation}` not allowed while session is {status}")]
    WrongStatus {
        operation: &'static str,
        status: &'static str,
    },

    #[error("invalid decisions: {0}")]
    InvalidDecisions(String),

    #[error("session is bound to index {expected}, got {actual}")]
    FingerprintMismatch { expected: String, actual: String },

    #[error("session: {0}")]
    Session(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("states missing from some series: {}", .0.join(", "))]
    StateMismatch(Vec<String>),

    #[error("unknown state code: {0}")]
    UnknownState(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Whether the error stems from bad input data rather than misuse.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_) | Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
