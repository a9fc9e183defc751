use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hard instance infeasible: {0}")]
    Infeasible(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty gradient batch")]
    EmptyBatch,

    #[error("tail index required: sigma1 = {sigma1} exceeds 1/(16*sqrt(2))")]
    TailIndexRequired { sigma1: f64 },

    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    #[error("run diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("rate fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
