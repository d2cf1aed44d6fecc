use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{CliError, ExperimentConfig, Gate};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSeed {
    pub cell: String,
    pub seed: u64,
}

impl CellSeed {
    pub fn new(cell: impl Into<String>, seed: u64) -> Self {
        Self {
            cell: cell.into(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub code_version: String,
    pub config_hash: String,
    /// The config file as given, before command-line overrides.
    pub config: serde_json::Value,
    pub effective_config: ExperimentConfig,
    pub workers: usize,
    pub wall_time_s: f64,
    pub status: String,
    #[serde(default)]
    pub error: Option<String>,
    pub cells: Vec<CellSeed>,
    pub censoring: BTreeMap<String, u64>,
    pub gates: Vec<Gate>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn start(cfg: &ExperimentConfig, raw: &str, workers: usize) -> Self {
        Self {
            kind: cfg.kind.label().into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            config: serde_json::from_str(raw).unwrap_or(serde_json::Value::Null),
            effective_config: cfg.clone(),
            workers,
            wall_time_s: 0.0,
            status: "running".into(),
            error: None,
            cells: Vec::new(),
            censoring: BTreeMap::new(),
            gates: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Files listed but missing from `dir`.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|f| !dir.join(f).is_file())
            .cloned()
            .collect()
    }
}
