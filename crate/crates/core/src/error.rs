use thiserror::Error;

/// Errors raised by the bound, recursion and quadrature routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula (negative variance, `D <= 0`, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration (bad scenario, mismatched grids, causality violation).
    #[error("configuration error: {0}")]
    Config(String),

    /// A rate could not be inverted because the curve does not reach it.
    #[error("rate {rate} outside the attainable interval [{min}, {max}]")]
    OutOfRange { rate: f64, min: f64, max: f64 },

    /// A recursion or parameter fit has no real solution.
    #[error("infeasible at step {step}: {reason}")]
    Infeasible { step: usize, reason: String },

    /// Root finding or quadrature failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
