//! Experiment driver for the wideband DOA estimation toolkit: plain-text
//! configuration, Monte-Carlo RMSE and detection sweeps, projector
//! interpolation-error reports, and CSV/manifest output. The `wdoa` binary
//! in this crate exposes it all as subcommands.

// Same convention as the core crate: `!(x > 0)` validations reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod runio;

pub use config::{ConfigError, EstimatorKind, ExperimentConfig};
pub use experiments::{
    estimate_trial, run_detect, run_interp_error, run_parallel, run_rmse, run_simulate, trial_seed,
    DetectTable, InterpErrorReport, RmseRow, RmseTable,
};
