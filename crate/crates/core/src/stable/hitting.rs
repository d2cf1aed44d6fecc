use serde::{Deserialize, Serialize};

use super::{StableLaw, StablePath, Walk};
use crate::error::{domain, Result};
use crate::rng::{map_streams, SeedTree};
use crate::stats::Moments;

/// Absorption band |x| ≤ h checked at grid times, with a censoring cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingRule {
    pub h: f64,
    pub t_cap: f64,
}

impl HittingRule {
    pub fn new(h: f64, t_cap: f64) -> Result<Self> {
        let r = Self { h, t_cap };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(domain("rule.h", format!("{} must be positive", self.h)));
        }
        if !(self.t_cap > 0.0) {
            return Err(domain("rule.t_cap", format!("{} must be positive", self.t_cap)));
        }
        Ok(())
    }

    /// h = dt^{1/α}, t_cap = 40/λ.
    pub fn nominal(law: &StableLaw, dt: f64, lambda: f64) -> Self {
        Self {
            h: law.scale(dt),
            t_cap: 40.0 / lambda,
        }
    }

    /// h = κ(α)·dt^{1/α}: the band shrunk by the continuity correction that
    /// cancels the leading discrete-monitoring bias.
    pub fn corrected(law: &StableLaw, dt: f64, lambda: f64) -> Self {
        Self {
            h: kappa(law.alpha()) * law.scale(dt),
            t_cap: 40.0 / lambda,
        }
    }
}

/// First grid time with |X| ≤ h, or None if censored.
pub fn detect_hit_zero(path: &StablePath, rule: &HittingRule) -> Option<f64> {
    path.times
        .iter()
        .zip(&path.values)
        .take_while(|(&t, _)| t <= rule.t_cap)
        .find(|(_, v)| v.abs() <= rule.h)
        .map(|(&t, _)| t)
}

// Frozen output of `calibrate_kappa` from x0 = 2, λ = 1, dt = 0.01 with
// 1.2e6 paths (4e5 at α = 2). Stderrs: 0.002, 0.005, 0.008, 0.016. A step
// may jump clean across the band, so the α = 2 node sits above the one-sided
// Brownian overshoot constant 0.8239.
const KAPPA_NODES: [(f64, f64); 4] = [(1.2, 0.304), (1.5, 0.662), (1.8, 0.8925), (2.0, 0.962)];

/// Continuity-correction factor for the absorption band, interpolated
/// linearly in α between calibrated nodes.
pub fn kappa(alpha: f64) -> f64 {
    let n = &KAPPA_NODES;
    if alpha <= n[0].0 {
        return n[0].1;
    }
    for w in n.windows(2) {
        let ((a0, k0), (a1, k1)) = (w[0], w[1]);
        if alpha <= a1 {
            return k0 + (k1 - k0) * (alpha - a0) / (a1 - a0);
        }
    }
    n[n.len() - 1].1
}

/// Running record minima of |X| along one monitored path. Gives the
/// detected hitting time for every band width at once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordMinima {
    records: Vec<(f64, f64)>,
}

impl RecordMinima {
    /// Walks from `x0` on the uniform grid until |X| ≤ `h_floor` or the cap.
    pub fn trace(
        law: &StableLaw,
        dt: f64,
        t_cap: f64,
        h_floor: f64,
        x0: f64,
        rng: &mut crate::rng::Stream,
    ) -> Self {
        let walk = Walk::uniform(law, dt, HittingRule { h: h_floor, t_cap });
        let mut records = Vec::new();
        let mut best = f64::INFINITY;
        walk.run(x0, rng, |t, y| {
            if y.abs() < best {
                best = y.abs();
                records.push((t, best));
            }
        });
        Self { records }
    }

    pub fn sigma(&self, h: f64) -> Option<f64> {
        let k = self.records.partition_point(|&(_, m)| m > h);
        self.records.get(k).map(|&(t, _)| t)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KappaFit {
    pub kappa: f64,
    pub kappa_stderr: f64,
    pub target: f64,
    pub n_paths: usize,
}

/// Solves E^{x0} e^{−λσ̂(κ·dt^{1/α})} = target for κ with common random
/// numbers across κ, so the estimate is monotone in κ.
pub fn calibrate_kappa(
    law: &StableLaw,
    x0: f64,
    lambda: f64,
    dt: f64,
    target: f64,
    n_paths: usize,
    seeds: SeedTree,
) -> KappaFit {
    let scale = law.scale(dt);
    let t_cap = 40.0 / lambda;
    let (lo, hi) = (0.2, 1.6);
    let paths = map_streams(seeds, n_paths, |_, rng| {
        RecordMinima::trace(law, dt, t_cap, lo * scale, x0, rng)
    });
    let stats = |k: f64| -> Moments {
        paths
            .iter()
            .map(|p| p.sigma(k * scale).map_or(0.0, |s| (-lambda * s).exp()))
            .collect()
    };
    let (mut a, mut b) = (lo, hi);
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if stats(m).mean() < target {
            a = m;
        } else {
            b = m;
        }
    }
    let k = 0.5 * (a + b);
    let d = 0.05;
    let slope = (stats(k + d).mean() - stats(k - d).mean()) / (2.0 * d);
    KappaFit {
        kappa: k,
        kappa_stderr: stats(k).stderr() / slope,
        target,
        n_paths,
    }
}
