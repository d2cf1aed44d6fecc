//! Numerical integration: adaptive Gauss–Kronrod panels, double-exponential
//! rules for endpoint singularities and infinite ranges, and half-period cell
//! summation with Euler acceleration for Fourier-type tails.

mod de;
mod gk;
mod osc;

pub use de::{exp_sinh, tanh_sinh};
pub use gk::{adaptive, gk21};
pub use osc::{fourier_tail, Phase};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerances and tuning knobs shared by every deterministic integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-period cells summed directly before Euler acceleration starts.
    pub direct_cells: usize,
    /// Number of repeated averagings applied to the tail partial sums.
    pub accel_depth: usize,
    /// Break point separating the singular/knee region from the regular tail.
    pub split: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            direct_cells: 40,
            accel_depth: 24,
            split: 1.0,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    /// A looser profile used inside nested integrals.
    pub fn fast() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-9,
            direct_cells: 24,
            accel_depth: 16,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(domain("quadrature", "tolerances must be positive"));
        }
        if !(self.split > 0.0) {
            return Err(domain("quadrature.split", "must be positive"));
        }
        if self.accel_depth == 0 || self.max_subdivisions == 0 {
            return Err(domain("quadrature", "accel_depth and max_subdivisions must be positive"));
        }
        Ok(())
    }

    pub(crate) fn tol_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value with an a-posteriori error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl std::ops::Sub for Estimate {
    type Output = Estimate;
    fn sub(self, o: Estimate) -> Estimate {
        Estimate {
            value: self.value - o.value,
            error: self.error + o.error,
        }
    }
}
