//! Itô synthesis of the skew stable process from a truncated Poisson point
//! measure of excursions, with its local time and subordinator record.

mod export;
mod synth;

pub use export::{export_skew_path, SkewPathSidecar};
pub use synth::{
    local_time, phi_at, resolvent_at_zero_from_excursions, sample_atom_marks, sample_excursion_from,
    synthesize, synthesize_nested, zero_sojourn_fraction, AtomKind, AtomRecord, ExcursionAtom, ExcursionResolvent,
    SkewPath, SynthesisBudget,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::potential::{hitting_complement, pairing_quadrature, BoundedTestFunction, EtaMeasure, Normalization};
use crate::quad::QuadratureSpec;
use crate::rng::Stream;
use crate::stable::StableLaw;

/// θ = C·(c₋1_{x<0} + c₊1_{x>0})|x|^{−1−β}dx restricted to |x| > ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaMeasure {
    pub eta: EtaMeasure,
    pub eps: f64,
    c: f64,
}

impl ThetaMeasure {
    pub fn new(law: &StableLaw, beta: f64, c_minus: f64, c_plus: f64, eps: f64) -> Result<Self> {
        let eta = EtaMeasure::new(beta, c_minus, c_plus, Normalization::Levy)?;
        if !(beta < law.alpha() - 1.0) {
            return Err(domain("beta", "θ needs beta < alpha - 1"));
        }
        if !(eps > 0.0) {
            return Err(domain("eps", "truncation level must be positive"));
        }
        Ok(Self {
            eta,
            eps,
            c: eta.scale(law)?,
        })
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..*self }
    }

    /// The normalizing constant C.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// M_ε = θ(|x| > ε) = C ε^{−β}/β.
    pub fn mass(&self) -> f64 {
        self.c * (self.eta.c_minus + self.eta.c_plus) * self.eps.powf(-self.eta.beta) / self.eta.beta
    }

    /// A draw from θ^{(ε)}/M_ε.
    #[inline]
    pub fn sample_mark(&self, rng: &mut Stream) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = self.eps * u.powf(-1.0 / self.eta.beta);
        if rng.random::<f64>() < self.eta.c_plus {
            r
        } else {
            -r
        }
    }

    /// ∫_{|x|>ε} E^x(1 − e^{−σ}) θ(dx).
    pub fn hitting_mass(&self, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
        pairing_quadrature(&BoundedTestFunction::one(), 1.0, law, &self.eta, Some(self.eps), q)
    }
}

/// Weights of the jump-entrance and approximate continuous-entrance atoms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub p: f64,
    pub delta: f64,
    pub q_eps: f64,
}

impl MixtureSpec {
    /// Only jump atoms from θ^{(ε)}.
    pub fn pure_jump(theta: &ThetaMeasure) -> Self {
        Self {
            p: 1.0,
            delta: theta.eps / 10.0,
            q_eps: 0.0,
        }
    }

    /// Atoms at ±δ carry the (1 − e^{−σ})-mass that the thinned, truncated
    /// jump atoms leave missing:
    /// q_ε = (1 − p∫_{|x|>ε}E^x(1−e^{−σ})θ(dx)) / E^δ(1−e^{−σ}).
    pub fn calibrated(
        theta: &ThetaMeasure,
        p: f64,
        delta: f64,
        law: &StableLaw,
        q: &QuadratureSpec,
    ) -> Result<Self> {
        let missing = 1.0 - p * theta.hitting_mass(law, q)?;
        let per_atom = hitting_complement(delta, 1.0, law, q)?;
        let m = Self {
            p,
            delta,
            q_eps: (missing / per_atom).max(0.0),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(domain("p", format!("{} is outside [0, 1]", self.p)));
        }
        if !(self.delta > 0.0) {
            return Err(domain("delta", "must be positive"));
        }
        if !(self.q_eps >= 0.0) {
            return Err(domain("q_eps", "must be nonnegative"));
        }
        Ok(())
    }
}
