//! Symmetric α-stable increments and paths, heavy-tailed jump laws and
//! first-hitting detection of zero.

mod hitting;
mod tail;
mod walk;

pub use hitting::{calibrate_kappa, detect_hit_zero, kappa, HittingRule, KappaFit, RecordMinima};
pub use tail::{sample_zeta, sample_zeta_finite_mean, FiniteMeanLaw, JumpLaw, TailLaw};
pub use walk::{Walk, WalkOutcome};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::Stream;

/// Symmetric α-stable law with characteristic exponent |z|^α.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw")]
pub struct StableLaw {
    alpha: f64,
}

#[derive(Deserialize)]
struct RawLaw {
    alpha: f64,
}

impl TryFrom<RawLaw> for StableLaw {
    type Error = crate::Error;
    fn try_from(r: RawLaw) -> Result<Self> {
        StableLaw::boundary(r.alpha)
    }
}

impl StableLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(domain("alpha", format!("{alpha} is outside (1, 2)")));
        }
        Ok(Self { alpha })
    }

    /// Also admits the Gaussian endpoint α = 2, for boundary checks.
    pub fn boundary(alpha: f64) -> Result<Self> {
        if alpha == 2.0 {
            return Ok(Self { alpha });
        }
        Self::new(alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Spatial scale of one step of length `dt`.
    pub fn scale(&self, dt: f64) -> f64 {
        dt.powf(1.0 / self.alpha)
    }

    /// Chambers–Mallows–Stuck draw with characteristic function exp(−|z|^α).
    #[inline]
    pub fn standard(&self, rng: &mut Stream) -> f64 {
        let a = self.alpha;
        // open interval (−π/2, π/2)
        let u: f64 = rng.random::<f64>() + 0.5 / (1u64 << 53) as f64;
        let v = PI * (u - 0.5);
        let w: f64 = rng.sample(Exp1);
        let cv = v.cos();
        let t = ((1.0 - a) * v).cos() / w;
        (a * v).sin() * (((1.0 - a) * t.ln() - cv.ln()) / a).exp()
    }

    /// Unchecked increment over `dt ≥ 0`.
    #[inline]
    pub fn increment(&self, dt: f64, rng: &mut Stream) -> f64 {
        self.scale(dt) * self.standard(rng)
    }

    /// Characteristic function of an increment over `t`.
    pub fn cf(&self, z: f64, t: f64) -> f64 {
        (-t * z.abs().powf(self.alpha)).exp()
    }
}

/// One increment over `dt`; `dt = 0` gives the degenerate draw 0.
pub fn sample_stable_increment(law: &StableLaw, dt: f64, rng: &mut Stream) -> Result<f64> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(domain("dt", format!("{dt} must be a finite nonnegative time")));
    }
    if dt == 0.0 {
        return Ok(0.0);
    }
    Ok(law.increment(dt, rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_max: f64,
    pub n_steps: usize,
}

impl Grid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        let g = Self { t_max, n_steps };
        g.validate()?;
        Ok(g)
    }

    /// Grid of step `dt` covering at least `t_max`.
    pub fn with_step(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(domain("grid.dt", "must be positive"));
        }
        let n = (t_max / dt).round() as usize;
        Self::new(n as f64 * dt, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(domain("grid.t_max", format!("{} must be positive", self.t_max)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        if self.n_steps == 0 {
            self.t_max
        } else {
            self.t_max / self.n_steps as f64
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StablePath {
    pub law: StableLaw,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub x0: f64,
}

impl StablePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the last grid time not after `t`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.values[k.saturating_sub(1)]
    }
}

pub fn simulate_path(law: &StableLaw, grid: &Grid, x0: f64, rng: &mut Stream) -> StablePath {
    let dt = grid.dt();
    let s = law.scale(dt);
    let mut values = Vec::with_capacity(grid.n_steps + 1);
    let mut x = x0;
    values.push(x);
    for _ in 0..grid.n_steps {
        x += s * law.standard(rng);
        values.push(x);
    }
    StablePath {
        law: *law,
        times: grid.times(),
        values,
        x0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use crate::stats::{ecf, Moments};

    #[test]
    fn rejects_alpha_outside_range() {
        assert!(StableLaw::new(1.0).is_err());
        assert!(StableLaw::new(2.0).is_err());
        assert!(StableLaw::new(f64::NAN).is_err());
        assert!(StableLaw::boundary(2.0).is_ok());
    }

    #[test]
    fn zero_step_is_degenerate() {
        let law = StableLaw::new(1.5).unwrap();
        let mut r = SeedTree::new(1).stream(0);
        assert_eq!(sample_stable_increment(&law, 0.0, &mut r).unwrap(), 0.0);
        assert!(sample_stable_increment(&law, -1.0, &mut r).is_err());
    }

    #[test]
    fn gaussian_endpoint_variance() {
        let law = StableLaw::boundary(2.0).unwrap();
        let mut r = SeedTree::new(2).stream(0);
        let m: Moments = (0..200_000).map(|_| law.increment(0.5, &mut r)).collect();
        assert!((m.variance() - 1.0).abs() < 0.02, "{}", m.variance());
    }

    #[test]
    fn empirical_cf_matches() {
        let law = StableLaw::new(1.5).unwrap();
        let mut r = SeedTree::new(3).stream(0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| law.standard(&mut r)).collect();
        for z in [0.5, 1.0, 2.0] {
            let (re, im) = ecf(&xs, z);
            let tol = 4.0 / (n as f64).sqrt();
            assert!((re - law.cf(z, 1.0)).abs() < tol, "z={z}");
            assert!(im.abs() < tol);
        }
    }

    #[test]
    fn empty_grid_gives_start_only() {
        let law = StableLaw::new(1.5).unwrap();
        let g = Grid::new(1.0, 0).unwrap();
        let p = simulate_path(&law, &g, 0.3, &mut SeedTree::new(0).stream(0));
        assert_eq!(p.values, vec![0.3]);
        assert_eq!(p.times, vec![0.0]);
    }
}
