//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("rectangle of {cells} cells exceeds the cell budget {budget}")]
    CellBudgetExceeded { cells: u128, budget: u64 },

    #[error("non-finite value at cell {cell}")]
    NonFinite { cell: String },

    #[error("nonpositive weight {value} at cell {cell}")]
    NonpositiveWeight { cell: String, value: f64 },

    #[error("enumeration of {outcomes} outcomes exceeds the budget {budget}")]
    EnumerationBudgetExceeded { outcomes: u128, budget: u64 },

    #[error("unknown sequence family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence flag violated: {0}")]
    FlagViolation(String),

    #[error("series diverges: {0}")]
    DivergentSeries(String),

    #[error("horizon too small to estimate tails (relative increment {increment:e} above tolerance {tol:e})")]
    HorizonTooSmall { increment: f64, tol: f64 },

    #[error("schedule must be a nonempty strictly increasing chain: {0}")]
    BadSchedule(String),

    #[error("hypothesis unsatisfiable on grid: {0}")]
    UnsatisfiableHypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
