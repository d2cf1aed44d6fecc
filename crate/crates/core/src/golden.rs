//! Versioned store of oracle values keyed by operation and parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STORE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenEntry {
    pub value: f64,
    /// Absolute acceptance tolerance for comparisons against this entry.
    pub tolerance: f64,
    /// Monte Carlo standard error; zero for deterministic oracles.
    #[serde(default)]
    pub stderr: f64,
    pub oracle: String,
    /// Seconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: u64,
}

impl GoldenEntry {
    pub fn new(value: f64, tolerance: f64, stderr: f64, oracle: impl Into<String>) -> Self {
        Self {
            value,
            tolerance,
            stderr,
            oracle: oracle.into(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn accepts(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tolerance
    }

    /// Disagreement between two regenerations in units of their combined
    /// standard error; deterministic pairs use the tolerance as σ.
    pub fn drift_sigma(&self, other: &GoldenEntry) -> f64 {
        let se = self.stderr.hypot(other.stderr);
        let scale = if se > 0.0 { se } else { self.tolerance.max(other.tolerance) / 3.0 };
        let d = (self.value - other.value).abs();
        if d == 0.0 {
            0.0
        } else if scale > 0.0 {
            d / scale
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenStore {
    pub version: u32,
    pub entries: BTreeMap<String, GoldenEntry>,
}

impl Default for GoldenStore {
    fn default() -> Self {
        Self {
            version: STORE_VERSION,
            entries: BTreeMap::new(),
        }
    }
}

/// `op(k1=v1,k2=v2)` with parameters in the given order.
pub fn key(op: &str, params: &[(&str, f64)]) -> String {
    let body: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{op}({})", body.join(","))
}

impl GoldenStore {
    pub fn load(path: &Path) -> Result<Self> {
        let store: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if store.version != STORE_VERSION {
            return Err(crate::error::domain(
                "golden.version",
                format!("store version {} but this build reads {STORE_VERSION}", store.version),
            ));
        }
        Ok(store)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&GoldenEntry> {
        self.entries.get(key)
    }

    /// Inserts `entry`, refusing when an existing value disagrees by more
    /// than 3σ unless `force` is set. Returns the drift in σ units.
    pub fn update(&mut self, key: &str, entry: GoldenEntry, force: bool) -> Result<f64> {
        let drift = self.entries.get(key).map_or(0.0, |old| old.drift_sigma(&entry));
        if drift > 3.0 && !force {
            let old = &self.entries[key];
            return Err(Error::Drift {
                key: key.to_string(),
                stored: old.value,
                fresh: entry.value,
                sigma: drift,
            });
        }
        self.entries.insert(key.to_string(), entry);
        Ok(drift)
    }
}
