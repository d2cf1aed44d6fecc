use std::f64::consts::PI;

use super::kernel::hitting_complement;
use super::{BoundedTestFunction, ResolventEstimate};
use crate::error::{domain, Result};
use crate::quad::{adaptive, fourier_tail, Phase, QuadratureSpec};
use crate::rng::{map_streams, SeedTree};
use crate::stable::{StableLaw, Walk};
use crate::stats::Moments;

// exp(−θ²/4) < 1e−21 beyond this
const GAUSS_CUT: f64 = 14.0;

fn unsupported(f: &BoundedTestFunction) -> crate::Error {
    domain("f", format!("no quadrature resolvent for {}", f.tag()))
}

/// G(z) = ∫₀^z u_λ(s) ds, with G(±∞) = ±1/(2λ).
fn u_primitive(z: f64, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(z.signum() * 0.5 / lambda);
    }
    let a = law.alpha();
    let az = z.abs();
    let g = |t: f64| 1.0 / (t * (lambda + (t / az).powf(a)));
    Ok(z.signum() * fourier_tail(&g, 0.0, Phase::Sin, q)?.value / PI)
}

/// R_λf(x) = ∫ u_λ(x − y) f(y) dy for the U_α process.
pub fn resolvent_quadrature(
    f: &BoundedTestFunction,
    x: f64,
    lambda: f64,
    law: &StableLaw,
    q: &QuadratureSpec,
) -> Result<f64> {
    match *f {
        BoundedTestFunction::Constant { c } => Ok(c / lambda),
        BoundedTestFunction::GaussianBump => {
            let a = law.alpha();
            let ax = x.abs();
            if ax <= 1.0 {
                let g = |t: f64| (x * t).cos() * f.fourier(t).unwrap() / (lambda + t.powf(a));
                let e = adaptive(&g, 0.0, GAUSS_CUT, q.abs_tol, q.rel_tol, q.max_subdivisions)?;
                Ok(e.value / PI)
            } else {
                let g = |t: f64| {
                    let th = t / ax;
                    f.fourier(th).unwrap() / (lambda + th.powf(a))
                };
                Ok(fourier_tail(&g, 0.0, Phase::Cos, q)?.value / (PI * ax))
            }
        }
        BoundedTestFunction::Indicator { a, b } => {
            Ok(u_primitive(x - a, lambda, law, q)? - u_primitive(x - b, lambda, law, q)?)
        }
        BoundedTestFunction::MinPower { .. } => Err(unsupported(f)),
    }
}

/// R_λf(0) − R_λf(x), evaluated without cancellation for smooth f.
fn resolvent_drop(
    f: &BoundedTestFunction,
    x: f64,
    lambda: f64,
    law: &StableLaw,
    q: &QuadratureSpec,
) -> Result<f64> {
    match *f {
        BoundedTestFunction::Constant { .. } => Ok(0.0),
        BoundedTestFunction::GaussianBump if x.abs() <= 1.0 => {
            let a = law.alpha();
            let g = |t: f64| {
                let s = (0.5 * x * t).sin();
                2.0 * s * s * f.fourier(t).unwrap() / (lambda + t.powf(a))
            };
            let e = adaptive(&g, 0.0, GAUSS_CUT, q.abs_tol, q.rel_tol, q.max_subdivisions)?;
            Ok(e.value / PI)
        }
        _ => Ok(resolvent_quadrature(f, 0.0, lambda, law, q)?
            - resolvent_quadrature(f, x, lambda, law, q)?),
    }
}

/// Killed resolvent V_λf(x) = R_λf(x) − E^x e^{−λσ}·R_λf(0).
pub fn v_lambda_quadrature(
    f: &BoundedTestFunction,
    x: f64,
    lambda: f64,
    law: &StableLaw,
    q: &QuadratureSpec,
) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let r0 = resolvent_quadrature(f, 0.0, lambda, law, q)?;
    let hc = hitting_complement(x, lambda, law, q)?;
    Ok(hc * r0 - resolvent_drop(f, x, lambda, law, q)?)
}

/// λ∫u_λ(y)f(y)dy, the U_α resolvent at the origin.
pub fn stable_resolvent_at_zero(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    q: &QuadratureSpec,
) -> Result<ResolventEstimate> {
    let v = lambda * resolvent_quadrature(f, 0.0, lambda, law, q)?;
    Ok(ResolventEstimate::exact(v, lambda, "quadrature: lambda * int u_lambda f"))
}

/// Monte Carlo V_λf(x) along killed walks.
pub fn estimate_v_lambda(
    f: &BoundedTestFunction,
    x: f64,
    lambda: f64,
    walk: &Walk,
    n_paths: usize,
    seeds: SeedTree,
) -> Result<ResolventEstimate> {
    if n_paths == 0 {
        return Err(domain("n_paths", "must be at least 1"));
    }
    if walk.rule.t_cap < 40.0 / lambda * (1.0 - 1e-12) {
        return Err(domain("rule.t_cap", "must be at least 40/λ"));
    }
    let runs = map_streams(seeds, n_paths, |_, rng| {
        let (v, out) = walk.discounted(x, lambda, &|y| f.eval(y), rng);
        (v, out.sigma.is_none())
    });
    let m: Moments = runs.iter().map(|r| r.0).collect();
    let censored = runs.iter().filter(|r| r.1).count();
    let bound = f.bound() * (-lambda * walk.rule.t_cap).exp() / lambda;
    Ok(ResolventEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_paths,
        lambda,
        meta: format!(
            "mc killed walk dt={} fine_dt={} h={:.3e} censored={censored} truncation<={bound:.1e}",
            walk.dt, walk.fine_dt, walk.rule.h
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::v_lambda_one;

    #[test]
    fn gaussian_resolvent_reference() {
        let law = StableLaw::new(1.5).unwrap();
        let q = QuadratureSpec::default();
        let r = resolvent_quadrature(&BoundedTestFunction::GaussianBump, 0.0, 1.0, &law, &q).unwrap();
        assert!((r - 0.546_822_057_105_006_208).abs() < 1e-12);
    }

    #[test]
    fn constant_reduces_to_v_one() {
        let law = StableLaw::new(1.5).unwrap();
        let q = QuadratureSpec::default();
        for x in [1e-3, 0.3, 2.0] {
            let a = v_lambda_quadrature(&BoundedTestFunction::one(), x, 1.0, &law, &q).unwrap();
            let b = v_lambda_one(x, 1.0, &law, &q).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_branches_are_continuous() {
        let law = StableLaw::new(1.5).unwrap();
        let q = QuadratureSpec::default();
        let f = BoundedTestFunction::GaussianBump;
        let a = resolvent_quadrature(&f, 1.0, 1.0, &law, &q).unwrap();
        let b = resolvent_quadrature(&f, 1.0 + 1e-12, 1.0, &law, &q).unwrap();
        assert!((a - b).abs() < 1e-10, "{a} {b}");
    }

    #[test]
    fn half_line_indicator_is_half_at_zero() {
        let law = StableLaw::new(1.5).unwrap();
        let q = QuadratureSpec::default();
        let f = BoundedTestFunction::positive_half_line();
        let r = resolvent_quadrature(&f, 0.0, 2.0, &law, &q).unwrap();
        assert!((r - 0.25).abs() < 1e-14);
        let p = resolvent_quadrature(&f, 0.7, 2.0, &law, &q).unwrap();
        let m = resolvent_quadrature(&f, -0.7, 2.0, &law, &q).unwrap();
        assert!((p + m - 0.5).abs() < 1e-10);
    }
}
