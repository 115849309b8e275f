//! Crate-wide error type.

use std::path::PathBuf;

use crate::fitting::FitReport;

/// Errors produced by basis construction, fitting, the dense oracle, the
/// benchmark harness, and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation parameter lies outside the knot-vector domain.
    #[error("parameter {value} lies outside the knot domain [{start}, {end}]")]
    OutOfDomain { value: f64, start: f64, end: f64 },

    /// Grid, control-net, or knot-vector shapes do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The normal-equation matrix is not positive definite, so the
    /// least-squares minimizer is not unique.
    #[error("collocation system is rank-deficient; the least-squares minimizer is not unique")]
    RankDeficient,

    /// The dense oracle refuses instances above its size cap.
    #[error("dense collocation of {rows} x {cols} exceeds the oracle cap of {max_rows} x {max_cols}")]
    OracleTooLarge {
        rows: usize,
        cols: usize,
        max_rows: usize,
        max_cols: usize,
    },

    /// The iteration blew up. `error` is the value that tripped the guard
    /// (possibly non-finite); `report` holds the last finite state reached.
    #[error("iteration diverged at step {iteration}: fitting error {error:e} tripped the divergence guard")]
    Diverged {
        iteration: usize,
        error: f64,
        report: Box<FitReport>,
    },

    /// An underlying file operation failed.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but its contents do not parse.
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Shorthand used by file helpers to attach the offending path.
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for parse failures with the offending path.
    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
