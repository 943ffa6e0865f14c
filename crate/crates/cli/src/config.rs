use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tailproc::models::ModelSpec;
use tailproc::suites::{Suite, DEFAULT_SERIES_LEN};
use tailproc::SpectralModel;

pub const DEFAULT_N: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A model given either in the `name:key=value` grammar or as a tagged table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelEntry {
    Grammar(String),
    Table(ModelSpec),
}

impl ModelEntry {
    pub fn resolve(&self) -> Result<SpectralModel, String> {
        match self {
            ModelEntry::Grammar(s) => s.parse().map_err(|e| format!("model '{s}': {e}")),
            ModelEntry::Table(spec) => {
                SpectralModel::try_from(spec.clone()).map_err(|e| format!("model table: {e}"))
            }
        }
    }
}

/// Contents of a `--config` TOML file. Every field is optional; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub suite: Option<String>,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
    pub lanes: Option<usize>,
    pub tolerance: Option<f64>,
    pub series_len: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Fully resolved run settings; echoed into every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    pub models: Vec<String>,
    pub n_samples: usize,
    pub seed: u64,
    pub lanes: usize,
    pub tolerance: f64,
    pub series_len: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn suites(&self) -> Result<Vec<Suite>, String> {
        tailproc::suites::parse_selection(&self.suite).map_err(|e| e.to_string())
    }

    pub fn check(&self) -> Result<(), String> {
        self.suites()?;
        if self.models.is_empty() {
            return Err("no model given (use --model or `models` in the config file)".into());
        }
        if self.n_samples == 0 {
            return Err("n must be positive".into());
        }
        if self.lanes == 0 {
            return Err("lanes must be positive".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.series_len == 0 {
            return Err("series length must be positive".into());
        }
        Ok(())
    }
}

pub fn default_series_len() -> usize {
    DEFAULT_SERIES_LEN
}
