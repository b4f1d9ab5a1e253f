//! Experiment runner: configuration, reproducible outputs and exit codes.

pub mod config;
pub mod experiments;
pub mod output;
pub mod verify;

use std::path::Path;

use serde_json::json;

use config::{Experiment, ExperimentConfig};
use experiments::Outcome;
use output::OutputDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error(transparent)]
    Core(beurling_core::Error),
    #[error("io error: {0}")]
    Io(String),
}

impl From<beurling_core::Error> for CliError {
    fn from(e: beurling_core::Error) -> Self {
        match e {
            beurling_core::Error::Capacity { .. } => CliError::Capacity(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Config(_) | CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// Runs one experiment into `out_dir`, writes `report.json` and the manifest,
/// and returns the combined output hash.
pub fn run_experiment(exp: Experiment, cfg: &ExperimentConfig, out_dir: &Path) -> Result<(String, Outcome), CliError> {
    if let Some(declared) = cfg.experiment {
        if declared != exp {
            return Err(CliError::Config(format!(
                "config declares {} but {} was requested",
                declared.name(),
                exp.name()
            )));
        }
    }
    let mut out = OutputDir::create(out_dir)?;
    let outcome = experiments::run(exp, cfg, &mut out)?;
    out.write_json(
        "report.json",
        &json!({ "experiment": exp.name(), "summary": outcome.summary, "failures": outcome.failures }),
    )?;
    let hash = out.finish()?;
    if !outcome.failures.is_empty() {
        return Err(CliError::Assertion(outcome.failures.join("; ")));
    }
    Ok((hash, outcome))
}
