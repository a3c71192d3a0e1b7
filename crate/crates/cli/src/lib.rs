//! Sweeps, contour extraction, figure presets and deterministic emitters on
//! top of `optobell_core`.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod commands;
pub mod config;
pub mod contour;
pub mod emit;
pub mod error;
pub mod presets;
pub mod sweep;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
