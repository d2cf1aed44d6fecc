use serde::{Deserialize, Serialize};

use super::laplace_hitting;
use crate::error::{domain, Result};
use crate::quad::QuadratureSpec;
use crate::rng::{map_streams, SeedTree};
use crate::stable::{HittingRule, StableLaw, Walk};
use crate::stats::{linear_fit, Moments};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingRow {
    pub dt: f64,
    pub h: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
    pub gap: f64,
    pub censored: usize,
    pub n_paths: usize,
    pub seed: u64,
}

/// Monte Carlo E^x e^{−λσ̂} on uniform grids of step `dt` for each entry of
/// `dt_list`, against the quadrature value u_λ(−x)/u_λ(0).
#[allow(clippy::too_many_arguments)]
pub fn hitting_convergence(
    x0: f64,
    lambda: f64,
    law: &StableLaw,
    dt_list: &[f64],
    corrected: bool,
    n_paths: usize,
    q: &QuadratureSpec,
    seeds: SeedTree,
) -> Result<Vec<HittingRow>> {
    if n_paths == 0 {
        return Err(domain("n_paths", "must be at least 1"));
    }
    if let Some(dt) = dt_list.iter().find(|dt| !(**dt > 0.0)) {
        return Err(domain("dt", format!("{dt} must be positive")));
    }
    let target = laplace_hitting(x0, lambda, law, q)?;
    Ok(dt_list
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let rule = if corrected {
                HittingRule::corrected(law, dt, lambda)
            } else {
                HittingRule::nominal(law, dt, lambda)
            };
            let walk = Walk::uniform(law, dt, rule);
            let cell = seeds.at(i as u64);
            let runs = map_streams(cell, n_paths, |_, rng| walk.run(x0, rng, |_, _| {}).sigma);
            let m: Moments = runs
                .iter()
                .map(|s| s.map_or(0.0, |s| (-lambda * s).exp()))
                .collect();
            HittingRow {
                dt,
                h: rule.h,
                estimate: m.mean(),
                stderr: m.stderr(),
                target,
                gap: m.mean() - target,
                censored: runs.iter().filter(|s| s.is_none()).count(),
                n_paths,
                seed: cell.key(),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub y: f64,
    pub survival: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub slope_stderr: f64,
    /// e^{intercept}: the fitted B in P(σ̂ > y) ≈ B y^{slope}.
    pub prefactor: f64,
    pub rows: Vec<TailRow>,
}

/// P^x(σ̂ > y) on the points `ys` and the log-log least-squares slope.
/// The walk is censored at max(ys), which counts as survival.
pub fn hitting_tail(x0: f64, walk: &Walk, ys: &[f64], n_paths: usize, seeds: SeedTree) -> Result<TailFit> {
    if ys.len() < 2 || ys.iter().any(|y| !(*y > 0.0)) {
        return Err(domain("ys", "need at least two positive levels"));
    }
    let cap = ys.iter().copied().fold(0.0, f64::max);
    let mut walk = *walk;
    walk.rule.t_cap = cap;
    let sigma = map_streams(seeds, n_paths, |_, rng| walk.run(x0, rng, |_, _| {}).sigma);
    let n = n_paths as f64;
    let rows: Vec<TailRow> = ys
        .iter()
        .map(|&y| {
            let k = sigma.iter().filter(|s| s.is_none_or(|s| s > y)).count() as f64;
            let p = k / n;
            TailRow {
                y,
                survival: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();
    if rows.iter().any(|r| r.survival == 0.0) {
        return Err(domain("n_paths", "too few paths: a tail level has no survivors"));
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.y.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.survival.ln()).collect();
    let fit = linear_fit(&lx, &ly);
    Ok(TailFit {
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        prefactor: fit.intercept.exp(),
        rows,
    })
}
