use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid base: {0}")]
    InvalidBase(String),

    #[error("digit {digit} at position {position} is outside the alphabet of base {base}")]
    DigitOutOfRange {
        position: usize,
        digit: u32,
        base: u32,
    },

    #[error("{0} is outside [0, 1]")]
    OutOfUnitInterval(String),

    #[error("expansion depth must be at least 1")]
    ZeroDepth,

    #[error("inconsistent arguments: {0}")]
    Inconsistent(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid index sequence: {0}")]
    InvalidSequence(String),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("branch budget exceeded: {needed} branches needed, budget is {budget}")]
    BudgetExceeded { needed: String, budget: usize },

    #[error("{0} is not q-rational")]
    NotQRational(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
