//! Iterated gain-based stochastic filter bank.
//!
//! A Gaussian-sum filter whose mixands are particle sub-ensembles updated by
//! an ensemble square-root step followed by annealed iterated-gain
//! corrections, together with the baselines and benchmark problems used to
//! evaluate it.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod filter_bank;
pub mod harness;
pub mod models;
pub mod numerics;

pub use error::{FilterError, Result};
