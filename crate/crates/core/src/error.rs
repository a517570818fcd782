use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain {domain}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("sensor reading for leg {leg} is invalid: {value}")]
    SensorDomain { leg: usize, value: f64 },

    #[error("gene {index} = {value} is outside [0, 1]")]
    GeneDomain { index: usize, value: f64 },

    #[error("genome must have {expected} genes, got {got}")]
    GenomeLength { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
