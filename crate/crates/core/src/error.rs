use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state index {index} out of range for {count} states")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("memory holds {len} pairs but the history length is {max}")]
    MemoryTooLong { len: usize, max: usize },

    #[error("history length must be between {min} and {max}, got {got}")]
    InvalidHistoryLen { got: usize, min: usize, max: usize },

    #[error("cannot parse memory state {0:?}")]
    StateSyntax(String),

    #[error("invalid word pair: {0}")]
    InvalidWordPair(String),

    #[error("policy has {found} probabilities, expected {expected}")]
    PolicyLength { expected: usize, found: usize },

    #[error("probability at state {index} is {value}, outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("unsupported policy schema version {0}")]
    SchemaVersion(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("distribution is not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("integrator blew up at t = {t}")]
    IntegratorBlowUp { t: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigenvalue iteration did not converge ({0})")]
    NoConvergence(&'static str),

    #[error("no run reached consensus")]
    NoConsensus,

    #[error("{path}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
