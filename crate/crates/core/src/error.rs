use thiserror::Error;

use crate::env::ActionId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("illegal move {action} in the current position")]
    IllegalMove { action: ActionId },
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("no legal action available")]
    NoLegalAction,
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("temperature must be > 0, got {0}")]
    InvalidTemperature(f64),
    #[error("behavior probability is zero for an action that was taken")]
    ZeroBehaviorProbability,
    #[error("estimator needs at least one reward sample")]
    EmptySample,
    #[error("beta must lie in [0, 1], got {0}")]
    BetaOutOfRange(f64),
    #[error("fold count must be >= 2, got {0}")]
    InvalidK(usize),
    #[error("search root is terminal")]
    TerminalRoot,
    #[error("unknown validation suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid mdp: {0}")]
    InvalidMdp(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
