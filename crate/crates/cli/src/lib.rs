//! Experiment harness for expanding-search-space Bayesian optimisation:
//! configuration, seeded repeats, CSV traces, summaries and diagnostics.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiment;

pub use config::{Assignments, BudgetRule, ExperimentSpec, RandomRegion};
pub use diagnostics::{diagnostics, Check, DiagnosticsSpec};
pub use error::{CliError, Result};
pub use experiment::{
    emit_log_distance, run_experiment, run_experiment_with, summarize, Manifest, Summary,
};
