use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SkewPath;
use crate::error::Result;

/// Parameters written next to an exported path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewPathSidecar {
    pub alpha: f64,
    pub beta: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub eps: f64,
    pub delta: f64,
    pub p: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub n_atoms: usize,
    pub n_jump_atoms: usize,
    pub censored: bool,
    pub last_open: bool,
}

/// Writes `<stem>.csv` with columns t, X, phi, S_at_phi and `<stem>.json`.
pub fn export_skew_path(path: &SkewPath, sidecar: &SkewPathSidecar, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(dir.join(format!("{stem}.csv")))?;
    w.write_record(["t", "X", "phi", "S_at_phi"])?;
    for j in 0..path.values.len() {
        w.write_record(&[
            format!("{:.9}", path.times[j]),
            format!("{:.12e}", path.values[j]),
            format!("{:.12e}", path.phi[j]),
            format!("{:.12e}", path.s_at_phi[j]),
        ])?;
    }
    w.flush()?;
    let f = BufWriter::new(File::create(dir.join(format!("{stem}.json")))?);
    serde_json::to_writer_pretty(f, sidecar)?;
    Ok(())
}

impl SkewPathSidecar {
    pub fn describe(path: &SkewPath, alpha: f64, eta: &crate::potential::EtaMeasure, seed: u64) -> Self {
        Self {
            alpha,
            beta: eta.beta,
            c_minus: eta.c_minus,
            c_plus: eta.c_plus,
            eps: path.eps,
            delta: path.delta,
            p: path.p,
            dt: path.dt,
            horizon: path.horizon,
            seed,
            n_atoms: path.atoms.len(),
            n_jump_atoms: path.jump_marks().count(),
            censored: path.censored,
            last_open: path.atoms.last().is_some_and(|a| a.open),
        }
    }
}
