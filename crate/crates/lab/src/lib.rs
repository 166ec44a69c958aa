//! Experiment runner for `ergolab-core`: strict configs, deterministic runs and
//! CSV/JSON artifacts.

pub mod config;
pub mod run;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use run::{run_experiment, ReportBundle, RunError};
