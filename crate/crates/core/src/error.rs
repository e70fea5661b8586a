use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("degenerate quantile curve")]
    DegenerateQuantileCurve,

    #[error("unknown synthetic profile `{0}` (expected pv_dominant, flat or asymmetric_morning)")]
    UnknownProfile(String),

    #[error("horizon mismatch: {what} has {got} steps, expected {expected}")]
    HorizonMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("infeasible battery specification: {0}")]
    InfeasibleSpec(String),

    #[error("quadrature panel count must be even and >= 2, got {0}")]
    OddPanelCount(usize),

    #[error("invalid configuration field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}
