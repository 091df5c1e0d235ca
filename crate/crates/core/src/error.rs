use thiserror::Error;

use crate::lagrangian::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time scale needs an interior point: at least 3 points required, got {0}")]
    TooFewPoints(usize),

    #[error("time scale points must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("{0} is not a point of the time scale")]
    NotInScale(f64),

    #[error("integration window requires a < b, got [{a}, {b}]")]
    EmptyWindow { a: f64, b: f64 },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },

    #[error("invalid argument: {0}")]
    Argument(String),
}
