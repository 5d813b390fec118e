use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimators, the simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A projector or mode was requested for the zero natural parameter.
    #[error("degenerate parameter: the zero natural parameter has no direction")]
    DegenerateParameter,

    /// A mean vector too short to normalise.
    #[error("degenerate mean: |m| = {norm:e} is too small to normalise")]
    DegenerateMean { norm: f64 },

    /// An ODE right-hand side produced a non-finite value.
    #[error("numerical blow-up at t = {t}: {detail}")]
    NumericalBlowup { t: f64, detail: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
