//! Command-line surface of the fractal long-short toolkit: price ingestion,
//! run configuration and the `hurst`, `select`, `backtest` and `synth`
//! subcommands.

// comparisons are written to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;

pub use error::{CliError, Result};
