//! Experiment runner for the online linear programming policies: seeded
//! Monte Carlo trials, per-trial CSV records and summary tables.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod report;
pub mod runner;
pub mod spec;

pub use error::{HarnessError, Result};
pub use runner::{run_experiment, CellResult, ExperimentResult, TrialFailure};
pub use spec::{derive_seed, ExperimentSpec, FrequencyRule};
