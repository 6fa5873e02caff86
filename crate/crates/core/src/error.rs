use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("empty maximization domain: every other component is +inf")]
    EmptyDomain,
    #[error("integral of component {component} is zero or not finite")]
    DegenerateIntegral { component: usize },
    #[error("divergence in component {component}: values grew to {magnitude:e}")]
    Divergence { component: usize, magnitude: f64 },
    #[error("hypothesis check failed: {0}")]
    Hypothesis(String),
    #[error("transport problem infeasible: {0}")]
    Infeasible(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("problem too large for the selected method: {0}")]
    Intractable(String),
    #[error("inadmissible tuple: slack {slack:e} at {witness:?}")]
    Inadmissible { slack: f64, witness: Vec<Vec<f64>> },
}

pub type Result<T> = std::result::Result<T, Error>;
