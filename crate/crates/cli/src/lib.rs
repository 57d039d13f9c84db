//! Experiment harness for modulo-hysteresis recovery: configuration, seeded random streams,
//! the (σ, T₂) Monte Carlo sweep and its CSV/SVG reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod rng;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig};
pub use sweep::{run_sweep, RunError, SweepOptions, SweepResult, SweepRow, TrialRecord};
