use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{resolvent_zero_formula, InnerV, PerturbedSpec};
use crate::error::{domain, Result};
use crate::potential::{
    limit_resolvent_at_zero, pairing_quadrature, stable_resolvent_at_zero, BoundedTestFunction,
    EtaMeasure, Normalization, VTable,
};
use crate::quad::QuadratureSpec;
use crate::rng::SeedTree;
use crate::stable::{JumpLaw, StableLaw};

/// Holding-rate schedule m_n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MRule {
    /// m_n = n^{β+1/2}·x_min^β, for tails with β < α − 1.
    A,
    /// m_n = n^{α−1/2}, for β > α − 1 or E|ζ| < ∞.
    B,
}

impl MRule {
    pub fn m(&self, n: f64, law: &StableLaw, jump: &JumpLaw) -> f64 {
        match (self, jump) {
            (MRule::A, JumpLaw::Pareto(t)) => n.powf(t.beta + 0.5) * t.x_min.powf(t.beta),
            (MRule::A, JumpLaw::FiniteMean(_)) => f64::NAN,
            (MRule::B, _) => n.powf(law.alpha() - 0.5),
        }
    }

    pub fn validate(&self, law: &StableLaw, jump: &JumpLaw) -> Result<()> {
        let a = law.alpha();
        match (self, jump) {
            (MRule::A, JumpLaw::Pareto(t)) if t.beta < a - 1.0 => Ok(()),
            (MRule::A, JumpLaw::Pareto(t)) => Err(domain(
                "beta",
                format!(
                    "regime a requires a jump tail index beta < alpha - 1 = {}, got {}",
                    a - 1.0,
                    t.beta
                ),
            )),
            (MRule::A, JumpLaw::FiniteMean(_)) => Err(domain(
                "jump",
                "regime a requires a regularly varying (Pareto) jump law",
            )),
            (MRule::B, JumpLaw::Pareto(t)) if t.beta > a - 1.0 => Ok(()),
            (MRule::B, JumpLaw::Pareto(t)) => Err(domain(
                "beta",
                format!(
                    "regime b requires beta > alpha - 1 = {} or a finite-mean jump law, got {}",
                    a - 1.0,
                    t.beta
                ),
            )),
            (MRule::B, JumpLaw::FiniteMean(_)) => Ok(()),
        }
    }
}

/// Per-cell Monte Carlo budget. With nested Monte Carlo the budget `paths`
/// is split as √paths ζ draws times √paths inner walks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBudget {
    pub paths: usize,
    pub nested: bool,
    pub dt: f64,
}

impl ConvergenceBudget {
    fn split(&self) -> (usize, InnerV) {
        if self.nested {
            let s = (self.paths as f64).sqrt().ceil() as usize;
            (s, InnerV::MonteCarlo { paths: s, dt: self.dt })
        } else {
            (self.paths, InnerV::Quadrature)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: f64,
    pub m_n: f64,
    pub lambda: f64,
    pub f_tag: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub gap: f64,
    pub n_paths: usize,
    pub seed: u64,
}

fn target(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    jump: &JumpLaw,
    rule: MRule,
    q: &QuadratureSpec,
) -> Result<f64> {
    Ok(match (rule, jump) {
        (MRule::A, JumpLaw::Pareto(t)) => {
            let eta = EtaMeasure::new(t.beta, t.c_minus, t.c_plus, Normalization::Star)?;
            limit_resolvent_at_zero(f, lambda, law, &eta, q)?.value
        }
        _ => stable_resolvent_at_zero(f, lambda, law, q)?.value,
    })
}

/// λR̂_λf(0) for X_{ζ/n, m_n} over `n_list`, through the holding formula.
#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment(
    f: &BoundedTestFunction,
    lambda: f64,
    base: &PerturbedSpec,
    n_list: &[f64],
    rule: MRule,
    budget: &ConvergenceBudget,
    q: &QuadratureSpec,
    seeds: SeedTree,
) -> Result<Vec<ConvergenceRow>> {
    base.jump.validate()?;
    rule.validate(&base.law, &base.jump)?;
    let goal = target(f, lambda, &base.law, &base.jump, rule, q)?;
    let v_one = VTable::new(&BoundedTestFunction::one(), lambda, &base.law, q)?;
    let (draws, inner) = budget.split();
    let v_f = match inner {
        InnerV::Quadrature if !f.is_constant_one() => Some(VTable::new(f, lambda, &base.law, q)?),
        _ => None,
    };
    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let m = rule.m(n, &base.law, &base.jump);
            let spec = PerturbedSpec {
                n,
                m: Some(m),
                ..*base
            };
            let cell = seeds.at(i as u64);
            let est =
                resolvent_zero_formula(f, lambda, &spec, &v_one, v_f.as_ref(), inner, draws, cell)?;
            Ok(ConvergenceRow {
                n,
                m_n: m,
                lambda,
                f_tag: f.tag(),
                estimate: est.value,
                stderr: est.stderr,
                target: goal,
                gap: est.value - goal,
                n_paths: est.n_paths,
                seed: cell.key(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub n: f64,
    pub m_n: f64,
    pub exact: f64,
    pub target: f64,
    pub gap: f64,
}

/// The holding formula evaluated without sampling: for a Pareto jump law
/// E V_λf(ζ/n) = β x_min^β n^{−β} ∫_{|x|>x_min/n} V_λf(x) |x|^{−1−β} w(x) dx.
pub fn exact_finite_n(
    f: &BoundedTestFunction,
    lambda: f64,
    base: &PerturbedSpec,
    n_list: &[f64],
    rule: MRule,
    q: &QuadratureSpec,
) -> Result<Vec<ExactRow>> {
    let JumpLaw::Pareto(t) = base.jump else {
        return Err(domain("jump", "exact evaluation needs a Pareto jump law"));
    };
    rule.validate(&base.law, &base.jump)?;
    let goal = target(f, lambda, &base.law, &base.jump, rule, q)?;
    let eta = EtaMeasure::new(t.beta, t.c_minus, t.c_plus, Normalization::Star)?;
    let one = BoundedTestFunction::one();
    n_list
        .iter()
        .map(|&n| {
            let m = rule.m(n, &base.law, &base.jump);
            let k = t.beta * t.x_min.powf(t.beta) * n.powf(-t.beta);
            let cut = Some(t.x_min / n);
            let pf = pairing_quadrature(f, lambda, &base.law, &eta, cut, q)?;
            let p1 = pairing_quadrature(&one, lambda, &base.law, &eta, cut, q)?;
            let exact = (f.eval(0.0) / m + k * pf) / (1.0 / m + k * p1);
            Ok(ExactRow {
                n,
                m_n: m,
                exact,
                target: goal,
                gap: exact - goal,
            })
        })
        .collect()
}

/// Comma-separated, header row, LF line endings.
pub fn write_convergence_csv(rows: &[ConvergenceRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
