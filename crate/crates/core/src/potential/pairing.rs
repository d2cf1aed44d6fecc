use std::cell::RefCell;

use super::constants::a_const;
use super::kernel::hitting_complement;
use super::resolvent::{estimate_v_lambda, resolvent_quadrature, v_lambda_quadrature};
use super::{BoundedTestFunction, EtaMeasure, ResolventEstimate};
use crate::error::{domain, Result};
use crate::quad::{adaptive, QuadratureSpec};
use crate::rng::SeedTree;
use crate::stable::{StableLaw, Walk};

/// Outer |x|-window of the pairing; the pieces outside are completed
/// analytically.
pub const X_LO: f64 = 1e-6;
pub const X_HI: f64 = 1e3;

/// How V_λf is evaluated inside ⟨η, V_λf⟩.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerMethod {
    Quadrature,
    MonteCarlo {
        n_paths: usize,
        dt: f64,
        /// Strata per sign on the log-|x| window, each with 4 Gauss nodes.
        strata: usize,
    },
}

fn check(law: &StableLaw, eta: &EtaMeasure) -> Result<()> {
    if !(eta.beta < law.alpha() - 1.0) {
        return Err(domain(
            "beta",
            format!(
                "β = {} must be below α − 1 = {} for ⟨η, V_λf⟩ to converge at 0",
                eta.beta,
                law.alpha() - 1.0
            ),
        ));
    }
    Ok(())
}

/// ∫_{|x| > cut} V_λf(x) η(dx) by quadrature in log|x|. With `cut = None`
/// the region below `X_LO` is completed from V_λf(x) ≈ R_λf(0)·A|x|^{α−1}.
pub fn pairing_quadrature(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    eta: &EtaMeasure,
    cut: Option<f64>,
    q: &QuadratureSpec,
) -> Result<f64> {
    if cut.is_none() {
        check(law, eta)?;
    }
    let a = law.alpha();
    let b = eta.beta;
    let lo = cut.unwrap_or(X_LO);
    let v = |x: f64| -> Result<f64> {
        if f.is_constant_one() {
            hitting_complement(x, lambda, law, q).map(|h| h / lambda)
        } else {
            v_lambda_quadrature(f, x, lambda, law, q)
        }
    };
    let (f_neg, f_pos) = f.limits();
    let mut total = 0.0;
    for (sign, w, f_inf) in [(-1.0, eta.c_minus, f_neg), (1.0, eta.c_plus, f_pos)] {
        if w == 0.0 {
            continue;
        }
        let err = RefCell::new(None);
        let g = |u: f64| {
            let x = u.exp();
            match v(sign * x) {
                Ok(val) => val * (-b * u).exp(),
                Err(e) => {
                    err.borrow_mut().get_or_insert(e.to_string());
                    f64::NAN
                }
            }
        };
        let e = adaptive(&g, lo.ln(), X_HI.ln(), q.abs_tol, q.rel_tol, q.max_subdivisions);
        let e = match (e, err.into_inner()) {
            (_, Some(msg)) => return Err(crate::Error::Quadrature(msg)),
            (e, None) => e?,
        };
        let mut part = e.value;
        if lo < X_HI {
            part += f_inf / lambda * X_HI.powf(-b) / b;
        }
        if cut.is_none() {
            let r0 = resolvent_quadrature(f, 0.0, lambda, law, q)?;
            part += r0 * a_const(lambda, law) * X_LO.powf(a - 1.0 - b) / (a - 1.0 - b);
        }
        total += w * part;
    }
    Ok(total * eta.scale(law)?)
}

/// ⟨η, V_λf⟩.
pub fn eta_pairing(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    eta: &EtaMeasure,
    outer: &QuadratureSpec,
    inner: &InnerMethod,
    seeds: SeedTree,
) -> Result<ResolventEstimate> {
    check(law, eta)?;
    match *inner {
        _ if f.is_constant_one() || *inner == InnerMethod::Quadrature => {
            let v = pairing_quadrature(f, lambda, law, eta, None, outer)?;
            Ok(ResolventEstimate::exact(v, lambda, "quadrature pairing"))
        }
        InnerMethod::MonteCarlo {
            n_paths,
            dt,
            strata,
        } => pairing_mc(f, lambda, law, eta, n_paths, dt, strata, seeds),
        InnerMethod::Quadrature => unreachable!(),
    }
}

#[allow(clippy::too_many_arguments)]
fn pairing_mc(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    eta: &EtaMeasure,
    n_paths: usize,
    dt: f64,
    strata: usize,
    seeds: SeedTree,
) -> Result<ResolventEstimate> {
    const GL4: [(f64, f64); 4] = [
        (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
        (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    ];
    let a = law.alpha();
    let b = eta.beta;
    let (u0, u1) = (X_LO.ln(), X_HI.ln());
    let width = (u1 - u0) / strata as f64;
    let (f_neg, f_pos) = f.limits();
    let mut value = 0.0;
    let mut var = 0.0;
    let mut node = 0u64;
    for (sign, w, f_inf) in [(-1.0, eta.c_minus, f_neg), (1.0, eta.c_plus, f_pos)] {
        if w == 0.0 {
            continue;
        }
        let mut lowest = None;
        for s in 0..strata {
            let mid = u0 + (s as f64 + 0.5) * width;
            for &(z, gw) in &GL4 {
                let u = mid + 0.5 * width * z;
                let x = sign * u.exp();
                let walk = Walk::for_start(law, dt, x, lambda);
                let est = estimate_v_lambda(f, x, lambda, &walk, n_paths, seeds.at(node))?;
                node += 1;
                let k = w * 0.5 * width * gw * (-b * u).exp();
                value += k * est.value;
                var += k * k * est.stderr * est.stderr;
                if lowest.is_none() {
                    lowest = Some((x.abs(), est));
                }
            }
        }
        let (xl, el) = lowest.expect("at least one stratum");
        // V(x) ≈ V(xl)(x/xl)^{α−1} below the window
        let k = w * xl.powf(1.0 - a) * X_LO.powf(a - 1.0 - b) / (a - 1.0 - b);
        value += k * el.value + w * f_inf / lambda * X_HI.powf(-b) / b;
        var += k * k * el.stderr * el.stderr;
    }
    let scale = eta.scale(law)?;
    Ok(ResolventEstimate {
        value: value * scale,
        stderr: var.sqrt() * scale,
        n_paths: n_paths * node as usize,
        lambda,
        meta: format!("stratified pairing, {strata} strata/sign, inner mc {n_paths} paths"),
    })
}

/// λR_λf(0) = ⟨η, V_λf⟩/⟨η, V_λ1⟩, the limit in the regime β < α − 1.
pub fn limit_resolvent_at_zero(
    f: &BoundedTestFunction,
    lambda: f64,
    law: &StableLaw,
    eta: &EtaMeasure,
    q: &QuadratureSpec,
) -> Result<ResolventEstimate> {
    if f.is_constant_one() {
        check(law, eta)?;
        return Ok(ResolventEstimate::exact(1.0, lambda, "identity for f = 1"));
    }
    let num = pairing_quadrature(f, lambda, law, eta, None, q)?;
    let den = pairing_quadrature(&BoundedTestFunction::one(), lambda, law, eta, None, q)?;
    Ok(ResolventEstimate::exact(num / den, lambda, "ratio of quadrature pairings"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Normalization;

    #[test]
    fn rejects_non_integrable_beta() {
        let law = StableLaw::new(1.5).unwrap();
        let eta = EtaMeasure::new(0.6, 0.5, 0.5, Normalization::Star).unwrap();
        let q = QuadratureSpec::default();
        assert!(pairing_quadrature(&BoundedTestFunction::one(), 1.0, &law, &eta, None, &q).is_err());
    }
}
