//! Experiment runner for the santalo numerical lab.
//!
//! A run reads a JSON [`ExperimentConfig`], dispatches to one experiment
//! kind and collects a flat list of [`Check`]s into a [`Report`].

pub mod builtins;
pub mod config;
mod experiments;
pub mod report;
mod trials;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use report::{Check, Report};

/// Runs a validated config. Trials use up to `jobs` threads.
pub fn execute(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<Report, ConfigError> {
    let runner = trials::Runner::new(cfg.seed(), jobs)?;
    let checks = experiments::run(cfg, &runner)?;
    let environment = serde_json::to_value(cfg).expect("config serializes");
    Ok(Report::new(cfg.kind().to_string(), cfg.builtin.clone(), environment, checks))
}
