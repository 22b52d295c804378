use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Data => 3,
            ErrorKind::Io => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("single-class table: every label is {0:?}")]
    SingleClass(String),

    #[error("empty classification table")]
    EmptyTable,

    #[error("label column {0:?} not found in header")]
    MissingLabel(String),

    #[error("row {row}: non-numeric feature in column {column:?}: {value:?}")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("nonpositive propensity {0}")]
    Propensity(f64),

    #[error("out-of-order sample index {got} (last ingested {last})")]
    OutOfOrder { got: usize, last: usize },

    #[error("tree parse error at byte {pos}: {message}")]
    TreeParse { pos: usize, message: String },

    #[error("instance too large for brute-force enumeration: {0}")]
    OracleGuard(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Usage,
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
