//! Experiment runner: JSON configs in, CSV tables and a JSON manifest out.

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod oracle;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, Kind, Params, RuleKind};
pub use manifest::{CellSeed, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }
}

impl From<skewstable::Error> for CliError {
    fn from(e: skewstable::Error) -> Self {
        match e {
            skewstable::Error::Domain { .. } | skewstable::Error::DegenerateExcursion { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Shortest round-trip decimal form, identical on every platform.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// Comma-separated, header row, LF line endings.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// What an experiment produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub gates: Vec<Gate>,
    pub cells: Vec<CellSeed>,
    pub censoring: std::collections::BTreeMap<String, u64>,
    /// Extra artifacts the experiment wrote into the output directory.
    pub files: Vec<String>,
}

/// Applies command-line overrides to a parsed config.
pub fn apply_overrides(cfg: &mut ExperimentConfig, seed: Option<u64>, out: Option<&Path>) {
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = Some(o.to_string_lossy().into_owned());
    }
}

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .as_deref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs").join(format!("{}-{}", cfg.kind.label(), cfg.master_seed)))
}

pub struct RunResult {
    pub manifest: RunManifest,
    pub dir: PathBuf,
    pub exit_code: i32,
}

/// Validates, runs on a pool of `workers` threads, and writes the tables,
/// `config.json` and `manifest.json` into the output directory. A run that
/// fails after validation still leaves a manifest listing what exists.
pub fn run(cfg: &ExperimentConfig, raw_config: &str, workers: usize) -> Result<RunResult, CliError> {
    experiments::validate(cfg)?;
    let dir = output_dir(cfg);
    std::fs::create_dir_all(&dir)?;
    let started = std::time::Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let result = pool.install(|| experiments::execute(cfg, &dir));
    let mut manifest = RunManifest::start(cfg, raw_config, workers);
    std::fs::write(dir.join("config.json"), raw_config)?;
    manifest.files.push("config.json".into());
    let code = match result {
        Ok(outcome) => {
            for t in &outcome.tables {
                std::fs::write(dir.join(t.file_name()), t.to_csv()?)?;
                manifest.files.push(t.file_name());
            }
            manifest.files.extend(outcome.files.iter().cloned());
            manifest.cells = outcome.cells;
            manifest.censoring = outcome.censoring;
            let failed = outcome.gates.iter().any(|g| !g.pass);
            manifest.gates = outcome.gates;
            manifest.status = if failed { "gate-failure" } else { "ok" }.into();
            if failed && cfg.gates {
                1
            } else {
                0
            }
        }
        Err(e) => {
            manifest.status = "aborted".into();
            manifest.error = Some(e.to_string());
            manifest.files.extend(existing_artifacts(&dir, &manifest.files));
            e.exit_code()
        }
    };
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.files.push("manifest.json".into());
    manifest.write(&dir.join("manifest.json"))?;
    Ok(RunResult {
        manifest,
        dir,
        exit_code: code,
    })
}

fn existing_artifacts(dir: &Path, listed: &[String]) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json" && !listed.contains(n))
        .collect();
    v.sort();
    v
}
