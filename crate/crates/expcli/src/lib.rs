//! Configuration-driven active-learning experiments: run seed batches,
//! aggregate, and write CSV / JSON / SVG artifacts.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod config;
pub mod configs;
pub mod emit;
pub mod runner;
pub mod svg;

pub use aggregate::AggregateResults;
pub use config::{ConfigError, ExperimentConfig};
pub use emit::emit;
pub use runner::{run_experiment, RunError};
