//! Signed likelihood root `R` and its two computable modifications:
//! the covariance-based `R̄*` and the empirical `R̂*`.
//!
//! The crate fits a parametric model by maximum likelihood (fully and with
//! the interest parameter held fixed), assembles the statistics, inverts
//! them into confidence limits and runs Monte Carlo coverage studies.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod inference;
pub mod models;
pub mod numerics;
pub mod simulate;
pub mod statistics;

pub use error::{Error, Result};
