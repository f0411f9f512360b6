use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rank must be at least 1, got {0}")]
    InvalidRank(u32),

    #[error("invalid weight vector: {0}")]
    InvalidWeight(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("resource budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("{what} = {value} is out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: String,
        limit: String,
    },

    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },

    #[error("cutoff too small: {0}")]
    CutoffTooSmall(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument {u} is within {distance:e} of the pole at {pole}")]
    PoleProximity { u: f64, pole: u64, distance: f64 },

    #[error("statistic undefined for the empty representation")]
    EmptyRepresentation,

    #[error("rejection sampler exhausted {0} attempts")]
    AttemptsExhausted(u64),

    #[error("mismatched parameters: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
