use thiserror::Error;

/// Errors raised by the solvers and evaluators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid spacing {spacing} too coarse for delay {delay}")]
    GridTooCoarse { spacing: f64, delay: f64 },

    #[error("{solver} did not converge within {iterations} iterations")]
    NonConvergence { solver: &'static str, iterations: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("empty input")]
    Empty,
}

pub type Result<T> = std::result::Result<T, Error>;
