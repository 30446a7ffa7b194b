use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;

/// Values accepted in a `--config` JSON file. Every key is optional and
/// command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub zeta: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub v_max: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub rate_min: Option<f64>,
    pub rate_max: Option<f64>,
    pub points: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub prior: Option<PriorKind>,
    pub grid_points: Option<usize>,
    pub s: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub budget: Option<u64>,
    pub fresh_codebook_per_trial: Option<bool>,
    pub level: Option<f64>,
    pub q: Option<Vec<f64>>,
    pub xi: Option<Vec<f64>>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    UniformProduct,
    WorstCaseGrid,
    FixedState,
    Representative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `flag` if given, else the config value, else `None`.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Like [`pick`] but missing values are a usage error naming `key`.
pub fn require<T: Clone>(flag: &Option<T>, file: &Option<T>, key: &str) -> Result<T, CliError> {
    pick(flag, file).ok_or_else(|| {
        CliError::Usage(format!(
            "missing required value `{key}` (pass --{} or set \"{key}\" in the config file)",
            key.replace('_', "-")
        ))
    })
}
