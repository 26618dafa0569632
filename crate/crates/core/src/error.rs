use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),

    #[error("stubborn weight row {row} sums to {actual}, expected {expected}")]
    RowSumMismatch {
        /// 1-based row index of the offending regular agent.
        row: usize,
        expected: f64,
        actual: f64,
    },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what}[{index}] = {value} exceeds the state bound {bound}")]
    OutOfBounds {
        what: &'static str,
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("invalid run configuration: {0}")]
    InvalidRun(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bound check expects {expected} mode, got {actual}")]
    ModeMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("trajectory does not cover t = {needed} (recorded times end at {available})")]
    Coverage { needed: u64, available: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: malformed trajectory file: {msg}", path.display())]
    Malformed { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
