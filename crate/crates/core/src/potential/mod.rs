//! Resolvent kernel of the symmetric stable process, hitting Laplace
//! transforms, the killed resolvent V_λ and pairings against the jump-entrance
//! measure η.

mod constants;
mod firsthit;
mod kernel;
mod pairing;
mod regvar;
mod resolvent;
mod table;
mod testfn;

pub use constants::{a_const, a_const_printed, b_const, b_const_tauberian, c_const};
pub use firsthit::{hitting_convergence, hitting_tail, HittingRow, TailFit, TailRow};
pub use kernel::{
    hitting_complement, integral_power_kernel, integral_power_kernel_raw, laplace_hitting,
    one_minus_cos_integral, one_minus_cos_integral_raw, one_minus_cos_kernel, u_lambda,
    u_lambda_zero, v_lambda_one,
};
pub use pairing::{
    eta_pairing, limit_resolvent_at_zero, pairing_quadrature, InnerMethod, X_HI, X_LO,
};
pub use regvar::{reg_variation_exact, reg_variation_ratio, RatioEstimate};
pub use resolvent::{
    estimate_v_lambda, resolvent_quadrature, stable_resolvent_at_zero, v_lambda_quadrature,
};
pub use table::VTable;
pub use testfn::BoundedTestFunction;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::stable::StableLaw;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Density (c₋1_{x<0} + c₊1_{x>0})|x|^{−1−β}.
    Star,
    /// The same density times C, so that ∫E^x(1−e^{−σ})η(dx) = 1.
    Levy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaMeasure {
    pub beta: f64,
    pub c_minus: f64,
    pub c_plus: f64,
    pub normalization: Normalization,
}

impl EtaMeasure {
    pub fn new(beta: f64, c_minus: f64, c_plus: f64, normalization: Normalization) -> Result<Self> {
        let e = Self {
            beta,
            c_minus,
            c_plus,
            normalization,
        };
        e.validate()?;
        Ok(e)
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
        Ok(())
    }

    /// Prefactor of the power density: 1 for `Star`, C for `Levy`.
    pub fn scale(&self, law: &StableLaw) -> Result<f64> {
        match self.normalization {
            Normalization::Star => Ok(1.0),
            Normalization::Levy => c_const(law, self),
        }
    }

    pub fn density(&self, x: f64, law: &StableLaw) -> Result<f64> {
        let w = if x < 0.0 { self.c_minus } else { self.c_plus };
        Ok(self.scale(law)? * w * x.abs().powf(-1.0 - self.beta))
    }

    pub fn with_normalization(mut self, n: Normalization) -> Self {
        self.normalization = n;
        self
    }
}

/// A resolvent-type value with its uncertainty. Deterministic quadrature
/// values carry stderr 0 and n_paths 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolventEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub lambda: f64,
    pub meta: String,
}

impl ResolventEstimate {
    pub fn exact(value: f64, lambda: f64, meta: impl Into<String>) -> Self {
        Self {
            value,
            stderr: 0.0,
            n_paths: 0,
            lambda,
            meta: meta.into(),
        }
    }

    /// value ± 3·stderr.
    pub fn interval(&self) -> (f64, f64) {
        (self.value - 3.0 * self.stderr, self.value + 3.0 * self.stderr)
    }

    pub fn overlaps(&self, other: &ResolventEstimate) -> bool {
        let (a0, a1) = self.interval();
        let (b0, b1) = other.interval();
        a0 <= b1 && b0 <= a1
    }
}
