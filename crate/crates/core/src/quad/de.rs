use std::f64::consts::FRAC_PI_2;

use super::Estimate;
use crate::error::{Error, Result};

const MAX_LEVEL: u32 = 12;

/// Tanh-sinh rule on [a, b]. Abscissae near the endpoints are formed from
/// the complement so that algebraic endpoint singularities are resolved.
pub fn tanh_sinh(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Estimate> {
    let d = 0.5 * (b - a);
    let tmax = 6.5;
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let w = FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        // offset from the nearer endpoint: 1 - tanh|u| = 2 / (e^{2|u|} + 1)
        let off = d * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let x = if u < 0.0 { a + off } else { b - off };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() {
            d * w * v
        } else {
            0.0
        }
    };
    level_refine(node, tmax, tol, "tanh-sinh")
}

/// Exp-sinh rule on [a, ∞) for integrands decaying at infinity.
pub fn exp_sinh(f: &impl Fn(f64) -> f64, a: f64, tol: f64) -> Result<Estimate> {
    // keep exp(π/2 sinh t) ≤ e^700
    let tmax = (700.0 / FRAC_PI_2).asinh();
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let e = u.exp();
        let w = FRAC_PI_2 * t.cosh() * e;
        if !w.is_finite() || e == 0.0 {
            return 0.0;
        }
        let v = f(a + e);
        let r = w * v;
        if r.is_finite() {
            r
        } else {
            0.0
        }
    };
    level_refine(node, tmax, tol, "exp-sinh")
}

fn level_refine(node: impl Fn(f64) -> f64, tmax: f64, tol: f64, name: &str) -> Result<Estimate> {
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        sum += node(k as f64 * h) + node(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            sum += node(k as f64 * h) + node(-(k as f64) * h);
            k += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if err <= tol.max(1e-15 * cur.abs()) {
            return Ok(Estimate {
                value: cur,
                error: err,
            });
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!("{name}: no convergence, last value {prev:.12e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_endpoint_singularity() {
        let e = tanh_sinh(&|x: f64| x.powf(-0.95), 0.0, 1.0, 1e-10).unwrap();
        assert!((e.value - 20.0).abs() < 1e-7, "{e:?}");
    }

    #[test]
    fn slow_algebraic_tail() {
        let e = exp_sinh(&|x: f64| (-1.5 * x.ln()).exp(), 1.0, 1e-12).unwrap();
        assert!((e.value - 2.0).abs() < 1e-9, "{e:?}");
    }

    #[test]
    fn exponential_tail() {
        let e = exp_sinh(&|x: f64| (-x).exp(), 0.0, 1e-13).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12, "{e:?}");
    }
}
