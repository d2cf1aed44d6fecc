use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Bounded measurable f used in resolvent pairings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundedTestFunction {
    Constant { c: f64 },
    /// exp(−x²).
    GaussianBump,
    /// 1 on [a, b]; either end may be infinite (null in JSON).
    Indicator {
        #[serde(with = "lower_end")]
        a: f64,
        #[serde(with = "upper_end")]
        b: f64,
    },
    /// min(|x|^p, 1).
    MinPower { p: f64 },
}

macro_rules! open_end {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_infinite() {
                    s.serialize_none()
                } else {
                    s.serialize_f64(*v)
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($inf))
            }
        }
    };
}
open_end!(lower_end, f64::NEG_INFINITY);
open_end!(upper_end, f64::INFINITY);

impl BoundedTestFunction {
    pub fn one() -> Self {
        BoundedTestFunction::Constant { c: 1.0 }
    }

    pub fn positive_half_line() -> Self {
        BoundedTestFunction::Indicator {
            a: 0.0,
            b: f64::INFINITY,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BoundedTestFunction::Constant { c } => c,
            BoundedTestFunction::GaussianBump => (-x * x).exp(),
            BoundedTestFunction::Indicator { a, b } => {
                if x >= a && x <= b {
                    1.0
                } else {
                    0.0
                }
            }
            BoundedTestFunction::MinPower { p } => x.abs().powf(p).min(1.0),
        }
    }

    pub fn bound(&self) -> f64 {
        match *self {
            BoundedTestFunction::Constant { c } => c.abs(),
            _ => 1.0,
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            BoundedTestFunction::Constant { c } => format!("constant[{c}]"),
            BoundedTestFunction::GaussianBump => "gaussian-bump".into(),
            BoundedTestFunction::Indicator { a, b } => format!("indicator[{a},{b}]"),
            BoundedTestFunction::MinPower { p } => format!("min-power[{p}]"),
        }
    }

    pub fn is_constant_one(&self) -> bool {
        *self == Self::one()
    }

    /// Limits of f at −∞ and +∞.
    pub fn limits(&self) -> (f64, f64) {
        match *self {
            BoundedTestFunction::Constant { c } => (c, c),
            BoundedTestFunction::GaussianBump => (0.0, 0.0),
            BoundedTestFunction::Indicator { a, b } => (
                if a == f64::NEG_INFINITY { 1.0 } else { 0.0 },
                if b == f64::INFINITY { 1.0 } else { 0.0 },
            ),
            BoundedTestFunction::MinPower { .. } => (1.0, 1.0),
        }
    }

    /// ∫ f(y) e^{iθy} dy where it is an ordinary function of θ.
    pub(crate) fn fourier(&self, theta: f64) -> Option<f64> {
        match *self {
            BoundedTestFunction::GaussianBump => Some(PI.sqrt() * (-0.25 * theta * theta).exp()),
            _ => None,
        }
    }
}
