use thiserror::Error;

use crate::domain::Kpi;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("baseline KPI `{0}` is zero; percent delta undefined")]
    ZeroBaseline(Kpi),

    #[error("session log is empty")]
    EmptyLog,

    #[error("invalid session: {0}")]
    InvalidSession(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("self-normalized estimate undefined: sum of weights is zero")]
    ZeroWeightSum,

    #[error("artificial dataset is empty")]
    EmptyDataset,

    #[error("grid of {size} settings exceeds the cap of {cap}; reduce points per dimension")]
    GridTooLarge { size: u128, cap: usize },

    #[error("no feasible candidates")]
    EmptyPool,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("incompatible results: {0}")]
    Incompatible(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
