use std::f64::consts::{PI, TAU};

use crate::error::{domain, Result};
use crate::quad::{adaptive, exp_sinh, fourier_tail, Estimate, Phase, QuadratureSpec};
use crate::stable::StableLaw;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain("lambda", format!("{lambda} must be positive")));
    }
    Ok(())
}

/// u_λ(0) = λ^{1/α−1} / (α sin(π/α)).
pub fn u_lambda_zero(lambda: f64, law: &StableLaw) -> f64 {
    let a = law.alpha();
    lambda.powf(1.0 / a - 1.0) / (a * (PI / a).sin())
}

/// K(c) = ∫₀^∞ (1 − cos y)/(c + y^α) dy for c ≥ 0.
pub fn one_minus_cos_kernel(c: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<Estimate> {
    let a = law.alpha();
    let y0 = TAU * q.split.max(1.0);
    let head = |y: f64| {
        let s = (0.5 * y).sin();
        2.0 * s * s / (c + y.powf(a))
    };
    let inv = |y: f64| {
        let p = (-a * y.ln()).exp();
        p / (1.0 + c * p)
    };
    let h = adaptive(&head, 0.0, y0, q.abs_tol, q.rel_tol, q.max_subdivisions)?;
    let flat = exp_sinh(&inv, y0, q.abs_tol)?;
    let osc = fourier_tail(&|y: f64| 1.0 / (c + y.powf(a)), y0, Phase::Cos, q)?;
    Ok(h + flat - osc)
}

/// u_λ(x) = (1/π)∫₀^∞ cos(xθ)/(λ+θ^α) dθ.
pub fn u_lambda(x: f64, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    check_lambda(lambda)?;
    let a = law.alpha();
    let ax = x.abs();
    let u0 = u_lambda_zero(lambda, law);
    if ax == 0.0 {
        return Ok(u0);
    }
    if lambda.powf(1.0 / a) * ax <= 1.0 {
        let k = one_minus_cos_kernel(lambda * ax.powf(a), law, q)?;
        return Ok(u0 - ax.powf(a - 1.0) * k.value / PI);
    }
    let g = |t: f64| 1.0 / (lambda + (t / ax).powf(a));
    let e = fourier_tail(&g, 0.0, Phase::Cos, q)?;
    Ok(e.value / (PI * ax))
}

/// E^x(1 − e^{−λσ}) = 1 − u_λ(x)/u_λ(0), computed without cancellation for
/// small |x|.
pub fn hitting_complement(x: f64, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    check_lambda(lambda)?;
    let a = law.alpha();
    let ax = x.abs();
    if ax == 0.0 {
        return Ok(0.0);
    }
    let u0 = u_lambda_zero(lambda, law);
    if lambda.powf(1.0 / a) * ax <= 1.0 {
        let k = one_minus_cos_kernel(lambda * ax.powf(a), law, q)?;
        return Ok(ax.powf(a - 1.0) * k.value / (PI * u0));
    }
    Ok(1.0 - u_lambda(x, lambda, law, q)? / u0)
}

/// E^x e^{−λσ} = u_λ(−x)/u_λ(0).
pub fn laplace_hitting(x: f64, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    Ok(1.0 - hitting_complement(x, lambda, law, q)?)
}

/// V_λ1(x) = λ^{−1} E^x(1 − e^{−λσ}).
pub fn v_lambda_one(x: f64, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    Ok(hitting_complement(x, lambda, law, q)? / lambda)
}

/// ∫₀^∞ θ^γ/(λ+θ^α) dθ = π/(α sin(π(γ+1)/α)) · λ^{(γ+1)/α−1}.
pub fn integral_power_kernel(gamma: f64, lambda: f64, law: &StableLaw) -> Result<f64> {
    check_lambda(lambda)?;
    let a = law.alpha();
    if !(gamma >= 0.0 && gamma < a - 1.0) {
        return Err(domain("gamma", format!("{gamma} is outside [0, α−1)")));
    }
    let g1 = (gamma + 1.0) / a;
    Ok(PI / (a * (PI * g1).sin()) * lambda.powf(g1 - 1.0))
}

/// Direct quadrature of the same integral.
pub fn integral_power_kernel_raw(
    gamma: f64,
    lambda: f64,
    law: &StableLaw,
    q: &QuadratureSpec,
) -> Result<f64> {
    check_lambda(lambda)?;
    let a = law.alpha();
    let near = |t: f64| t.powf(gamma) / (lambda + t.powf(a));
    // t^{γ−α} is integrated exactly; the remainder decays like t^{γ−2α}.
    let far = |t: f64| {
        let l = t.ln();
        let u = lambda * (-a * l).exp();
        -((gamma - a) * l).exp() * u / (1.0 + u)
    };
    let s = q.split;
    let head = adaptive(&near, 0.0, s, q.abs_tol, q.rel_tol, q.max_subdivisions)?;
    let tail = exp_sinh(&far, s, q.abs_tol)?;
    let power = s.powf(gamma - a + 1.0) / (a - 1.0 - gamma);
    Ok(head.value + power + tail.value)
}

/// ∫₀^∞ (1 − cos(xy))/y^α dy = |x|^{α−1} Γ(2−α) sin(πα/2)/(α−1).
pub fn one_minus_cos_integral(x: f64, law: &StableLaw) -> f64 {
    let a = law.alpha();
    if x == 0.0 {
        return 0.0;
    }
    x.abs().powf(a - 1.0) * statrs::function::gamma::gamma(2.0 - a) * (PI * a / 2.0).sin()
        / (a - 1.0)
}

/// Direct quadrature of the same integral.
pub fn one_minus_cos_integral_raw(x: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    let k = one_minus_cos_kernel(0.0, law, q)?;
    Ok(x.abs().powf(law.alpha() - 1.0) * k.value)
}
