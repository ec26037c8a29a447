//! Market-neutral long-short portfolios built from beta-hedged pair spreads.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`fbm`]: fractional Brownian motion, minimal-cover Hurst estimation and
//!   horizon rescaling of volatility.
//! * [`spreads`]: entry-normalized returns, hedge ratios and spread series.
//! * [`selection`]: fractal Kelly ranking and greedy disjoint spread selection.
//! * [`optimizer`]: horizon-rescaled covariance, weight solve, leverage and
//!   per-asset leg decomposition.
//! * [`backtest`]: walk-forward out-of-sample engine with costs and metrics.
//! * [`synth`]: synthetic universes with planted mean-reverting pairs.

// comparisons are written to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod error;
pub mod fbm;
pub mod optimizer;
pub mod selection;
pub mod spreads;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
