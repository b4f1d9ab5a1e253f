//! Experiment configuration: one JSON document per run.

use std::path::Path;

use beurling_core::primes::SystemDescription;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
#[value(rename_all = "kebab-case")]
pub enum Experiment {
    Density,
    Diamond,
    RandomExample,
    Counterexample,
    Smooth,
    Verify,
    Oscillate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Density => "DENSITY",
            Experiment::Diamond => "DIAMOND",
            Experiment::RandomExample => "RANDOM_EXAMPLE",
            Experiment::Counterexample => "COUNTEREXAMPLE",
            Experiment::Smooth => "SMOOTH",
            Experiment::Verify => "VERIFY",
            Experiment::Oscillate => "OSCILLATE",
        }
    }
}

/// Expected outcome; a mismatch exits with status 2.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub trend: Option<String>,
    pub estimate: Option<f64>,
    pub estimate_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_side_rel")]
    pub side_rel: f64,
    #[serde(default = "default_mass")]
    pub mass: f64,
    #[serde(default = "default_gap_rel")]
    pub density_gap_rel: f64,
}

fn default_side_rel() -> f64 {
    1e-6
}
fn default_mass() -> f64 {
    1e-8
}
fn default_gap_rel() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { side_rel: default_side_rel(), mass: default_mass(), density_gap_rel: default_gap_rel() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub system: Option<SystemDescription>,
    #[serde(rename = "X")]
    pub x: Option<f64>,
    #[serde(rename = "Y")]
    pub y: Option<f64>,
    #[serde(rename = "log_Y")]
    pub log_y: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub dt: Option<f64>,
    pub u_grid: Option<Vec<f64>>,
    pub y_grid: Option<Vec<f64>>,
    pub eps_list: Option<Vec<f64>>,
    pub sigma_list: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub n_max: Option<u32>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub u_probe: Option<f64>,
    pub block_log_len: Option<f64>,
    pub swing: Option<f64>,
    pub write_integers: Option<bool>,
    pub output: Option<String>,
    pub expect: Option<Expect>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at '{path}': {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `Y` from either `Y` or `log_Y`.
    pub fn horizon_y(&self) -> Option<f64> {
        self.log_y.map(f64::exp).or(self.y)
    }

    pub fn require_seed(&self, what: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("at 'seed': {what} is stochastic and needs a seed")))
    }

    /// Seeds of a sweep: `seeds` if given, else the single `seed`.
    pub fn seed_list(&self, what: &str) -> Result<Vec<u64>, CliError> {
        match &self.seeds {
            Some(s) if !s.is_empty() => Ok(s.clone()),
            Some(_) => Err(CliError::Config("at 'seeds': empty seed list".into())),
            None => Ok(vec![self.require_seed(what)?]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_names_path() {
        let err = ExperimentConfig::from_json(r#"{"X": 10, "tolerances": {"side": 1}}"#).unwrap_err();
        let CliError::Config(msg) = err else { panic!() };
        assert!(msg.contains("tolerances"), "{msg}");
    }

    #[test]
    fn wrong_type_names_path() {
        let err = ExperimentConfig::from_json(r#"{"system": {"kind": "usual", "params": {}, "seed": "x"}}"#).unwrap_err();
        let CliError::Config(msg) = err else { panic!() };
        assert!(msg.contains("system.seed"), "{msg}");
    }

    #[test]
    fn experiment_names() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "RANDOM_EXAMPLE", "log_Y": 2}"#).unwrap();
        assert_eq!(c.experiment, Some(Experiment::RandomExample));
        assert!((c.horizon_y().unwrap() - 2f64.exp()).abs() < 1e-12);
    }
}
