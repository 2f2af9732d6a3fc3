use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("population size {0} is below the minimum of 4")]
    PopulationTooSmall(usize),

    #[error("objective returned a non-finite value {0}")]
    NonFiniteFitness(f64),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    /// Raised by budgeted objectives once no further fresh evaluations are allowed.
    #[error("evaluation budget exhausted")]
    BudgetExhausted,

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("value {value} is not admissible on axis `{axis}`")]
    NotInAxis { axis: String, value: String },

    #[error("search space has {0} configurations, above the enumeration limit")]
    SpaceTooLarge(u128),

    #[error("predictor failure: {0}")]
    Predictor(String),

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("generation {g} is outside the sinusoidal window (max {limit})")]
    OutsideSinusoidalWindow { g: usize, limit: f64 },

    #[error("trace error: {0}")]
    Trace(String),
}

pub type Result<T> = std::result::Result<T, Error>;
