//! Online linear programming: instance generation, the sampled dual LP,
//! LP-based / first-order / hybrid re-solving policies, bi-objective regret
//! metrics and the compute-budgeted re-solving frequency planner.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual_lp;
pub mod error;
pub mod input_gen;
pub mod metrics;
pub mod planner;
pub mod policies;

pub use error::{Error, Result};
