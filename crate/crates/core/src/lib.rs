//! Bogoliubov excitations of a homogeneous BEC under a time-dependent
//! interaction strength, with quantum and classical nonclassicality criteria.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod output;
pub mod quantum;
pub mod schedule;
pub mod units;

pub use error::{Error, Result};
