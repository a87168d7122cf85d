//! Experiment driver: configuration, seeded parallel trials and CSV output.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod run;

use std::path::Path;

pub use config::{ConfigError, Experiment, ExperimentConfig, PartialConfig};
pub use output::CsvRow;
pub use run::{run, RunError, RunOutput};

/// Reads the config file, if any, and lays the flag values over it.
pub fn parse_config(
    file: Option<&Path>,
    flags: PartialConfig,
) -> Result<ExperimentConfig, ConfigError> {
    let base = match file {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    base.overlay(flags).resolve()
}
