//! Config-driven experiment runner for the `boltzprice` solvers: JSON
//! experiment files, built-in presets, parallel runs and CSV artifacts.

// Range checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{load_config, parse_config, resolve, Experiment, ExperimentConfig};
pub use output::{run_experiment, Report};
pub use presets::{preset, Scale};
