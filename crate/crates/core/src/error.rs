use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical formula.
    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// Scenario configuration could not be parsed or violates an invariant.
    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    #[error("Bessel function overflow: I_{order}({x}) exceeds f64 range")]
    BesselOverflow { order: i32, x: f64 },

    /// Grid oracle failed its own resolution check.
    #[error("insufficient grid resolution: doubling points changed the signal by {change:.3e} (limit {limit:.1e})")]
    Resolution { change: f64, limit: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("curve mismatch: {0}")]
    GridMismatch(String),

    #[error("empty tau grid: {0}")]
    EmptyGrid(String),

    #[error("count statistics: {0}")]
    Counts(String),

    #[error("sweep: {0}")]
    Sweep(String),

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: u64, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            op,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
