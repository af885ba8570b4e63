//! Config-driven experiment runner on top of `rfi_core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod runner;
pub mod svg;

pub use config::{load_config, validate_config, Diagnostic, ExperimentConfig, JobSpec};
pub use error::CliError;
pub use runner::{run_experiment, RunOutput};
