use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::Stream;

/// Exact Pareto law for the jump ζ: P(|ζ| > x) = (x/x_min)^{−β} for
/// x ≥ x_min, independent sign with P(+) = c₊.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub beta: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub x_min: f64,
}

impl TailLaw {
    pub fn new(beta: f64, c_minus: f64, c_plus: f64, x_min: f64) -> Result<Self> {
        let t = Self {
            beta,
            c_minus,
            c_plus,
            x_min,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn symmetric(beta: f64) -> Result<Self> {
        Self::new(beta, 0.5, 0.5, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(domain("beta", format!("{} is outside (0, 1)", self.beta)));
        }
        if !(self.c_minus >= 0.0 && self.c_plus >= 0.0)
            || (self.c_minus + self.c_plus - 1.0).abs() > 1e-12
        {
            return Err(domain("c_minus/c_plus", "must be nonnegative and sum to 1"));
        }
        if !(self.x_min > 0.0) {
            return Err(domain("x_min", "must be positive"));
        }
        Ok(())
    }

    /// P(|ζ| > x).
    pub fn survival(&self, x: f64) -> f64 {
        if x < self.x_min {
            1.0
        } else {
            (x / self.x_min).powf(-self.beta)
        }
    }

    /// E min(|ζ|, m).
    pub fn truncated_mean(&self, m: f64) -> f64 {
        if m <= self.x_min {
            return m;
        }
        let b = self.beta;
        self.x_min + self.x_min.powf(b) * (m.powf(1.0 - b) - self.x_min.powf(1.0 - b)) / (1.0 - b)
    }

    #[inline]
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let mag = self.x_min * u.powf(-1.0 / self.beta);
        if rng.random::<f64>() < self.c_plus {
            mag
        } else {
            -mag
        }
    }
}

/// Symmetric jump laws with E|ζ| < ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FiniteMeanLaw {
    /// ±a with equal probability.
    TwoPoint { a: f64 },
    /// Fair sign times an exponential magnitude.
    Exponential { mean: f64 },
    /// Always `value`.
    Constant { value: f64 },
}

impl FiniteMeanLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FiniteMeanLaw::TwoPoint { a } if !(a > 0.0) => Err(domain("a", "must be positive")),
            FiniteMeanLaw::Exponential { mean } if !(mean > 0.0) => {
                Err(domain("mean", "must be positive"))
            }
            FiniteMeanLaw::Constant { value } if value == 0.0 || !value.is_finite() => {
                Err(domain("value", "must be finite and nonzero"))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            FiniteMeanLaw::TwoPoint { a } => {
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            }
            FiniteMeanLaw::Exponential { mean } => {
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    mean * e
                } else {
                    -mean * e
                }
            }
            FiniteMeanLaw::Constant { value } => value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpLaw {
    Pareto(TailLaw),
    FiniteMean(FiniteMeanLaw),
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpLaw::Pareto(t) => t.validate(),
            JumpLaw::FiniteMean(f) => f.validate(),
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match self {
            JumpLaw::Pareto(t) => t.sample(rng),
            JumpLaw::FiniteMean(f) => f.sample(rng),
        }
    }
}

pub fn sample_zeta(tail: &TailLaw, rng: &mut Stream) -> f64 {
    tail.sample(rng)
}

pub fn sample_zeta_finite_mean(law: &FiniteMeanLaw, rng: &mut Stream) -> f64 {
    law.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn validation() {
        assert!(TailLaw::new(1.0, 0.5, 0.5, 1.0).is_err());
        assert!(TailLaw::new(0.5, 0.6, 0.6, 1.0).is_err());
        assert!(TailLaw::new(0.5, 0.0, 1.0, 0.0).is_err());
        assert!(TailLaw::new(0.5, 0.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn truncated_mean_closed_form() {
        let t = TailLaw::symmetric(0.25).unwrap();
        // 1 + (100^{0.75} − 1)/0.75
        assert!((t.truncated_mean(100.0) - (1.0 + (100f64.powf(0.75) - 1.0) / 0.75)).abs() < 1e-12);
        assert_eq!(t.truncated_mean(0.5), 0.5);
    }

    #[test]
    fn magnitudes_never_below_x_min() {
        let t = TailLaw::new(0.4, 0.3, 0.7, 2.0).unwrap();
        let mut r = SeedTree::new(5).stream(0);
        assert!((0..10_000).all(|_| t.sample(&mut r).abs() >= 2.0));
    }
}
