//! Batch driver for the deadcore solver: TOML-configured runs, sweeps, the
//! Liouville and borderline experiments, artifact emission and the
//! acceptance suite.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod instance;

pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, Result};
