//! Causal rate-distortion bounds for a scalar Gauss-Markov source tracked
//! with noisy side information at the decoder.
//!
//! The crate computes the closed-form information CRDFs (with and without
//! side information), the achievable curves of the additive Gaussian and
//! modulo test channels, and the directed-information identities that tie
//! them together. Independent oracles (scalar Riccati recursion, Monte-Carlo
//! Kalman filtering, exact Gaussian covariance algebra) live alongside so
//! every curve can be cross-checked.
//!
//! Rates are in bits throughout. An infinite side-information noise variance
//! encodes "no side information".

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod di;
pub mod envelope;
pub mod error;
pub mod gauss_tc;
pub mod model;
pub mod modulo;
pub mod oracle;
mod roots;

pub use error::{Error, Result};
pub use model::{parallel_sum, plog, RDCurve, RDPoint, ScenarioParams, Trajectory};
