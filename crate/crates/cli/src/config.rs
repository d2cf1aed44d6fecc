use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skewstable::perturbed::MRule;
use skewstable::potential::BoundedTestFunction;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Constants,
    QuadratureCheck,
    HittingCalibration,
    ResolventConverge,
    ExcursionSynthesize,
    RegVariation,
    Report,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::Constants => "constants",
            Kind::QuadratureCheck => "quadrature-check",
            Kind::HittingCalibration => "hitting-calibration",
            Kind::ResolventConverge => "resolvent-converge",
            Kind::ExcursionSynthesize => "excursion-synthesize",
            Kind::RegVariation => "reg-variation",
            Kind::Report => "report",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// h = dt^{1/α}.
    Nominal,
    /// h = κ(α)·dt^{1/α}.
    Corrected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub alpha: f64,
    pub beta: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub lambda: f64,
    pub x0: f64,
    pub x_min: f64,
    pub p: f64,
    pub eps: f64,
    /// Defaults to ε/10.
    pub delta: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
    pub dt_list: Vec<f64>,
    pub rule: RuleKind,
    pub paths: usize,
    pub nested: bool,
    /// Paths for the κ fit in hitting-calibration; 0 skips it.
    pub kappa_paths: usize,
    pub n_list: Vec<f64>,
    pub m_rule: Option<MRule>,
    pub f: BoundedTestFunction,
    pub g: BoundedTestFunction,
    pub scales: Vec<f64>,
    pub h_probe: Vec<f64>,
    pub export_paths: usize,
    pub run_dir: Option<String>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 0.25,
            c_minus: 0.5,
            c_plus: 0.5,
            lambda: 1.0,
            x0: 1.0,
            x_min: 1.0,
            p: 1.0,
            eps: 0.1,
            delta: None,
            horizon: 1.0,
            dt: 0.01,
            dt_list: vec![4e-3, 2e-3, 1e-3],
            rule: RuleKind::Corrected,
            paths: 10_000,
            nested: false,
            kappa_paths: 0,
            n_list: vec![10.0, 100.0, 1000.0],
            m_rule: None,
            f: BoundedTestFunction::GaussianBump,
            g: BoundedTestFunction::MinPower { p: 0.5 },
            scales: vec![1e2, 1e3, 1e4],
            h_probe: vec![0.1, 0.05, 0.01],
            export_paths: 1,
            run_dir: None,
        }
    }
}

/// One experiment: kind, parameters, master seed and output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub params: Params,
    pub master_seed: u64,
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Exit status reflects gate results when set.
    #[serde(default)]
    pub gates: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
