use skewstable::excursion::{resolvent_at_zero_from_excursions, SynthesisBudget, ThetaMeasure};
use skewstable::golden::{key, GoldenEntry, GoldenStore};
use skewstable::perturbed::{resolvent_zero_formula, InnerV, PerturbedSpec};
use skewstable::potential::{
    a_const, b_const, b_const_tauberian, c_const, eta_pairing, integral_power_kernel_raw,
    laplace_hitting, limit_resolvent_at_zero, one_minus_cos_integral_raw, pairing_quadrature,
    reg_variation_exact, stable_resolvent_at_zero, u_lambda, u_lambda_zero, v_lambda_one,
    BoundedTestFunction, EtaMeasure, InnerMethod, Normalization, VTable,
};
use skewstable::quad::QuadratureSpec;
use skewstable::rng::SeedTree;
use skewstable::stable::{calibrate_kappa, JumpLaw, StableLaw, TailLaw};

use crate::CliError;

/// Default path of the golden store, relative to the workspace root.
pub const DEFAULT_STORE: &str = "crates/core/golden/values.json";

type Generator = Box<dyn Fn(usize) -> Result<GoldenEntry, CliError> + Sync>;

pub struct OracleSpec {
    pub key: String,
    /// Default Monte Carlo budget; 0 for deterministic oracles.
    pub default_budget: usize,
    pub run: Generator,
}

fn law() -> StableLaw {
    StableLaw::new(1.5).expect("valid alpha")
}

fn star() -> EtaMeasure {
    EtaMeasure::new(0.25, 0.5, 0.5, Normalization::Star).expect("valid eta")
}

fn det(k: String, f: impl Fn() -> Result<(f64, f64, String), CliError> + Sync + 'static) -> OracleSpec {
    OracleSpec {
        key: k,
        default_budget: 0,
        run: Box::new(move |_| {
            let (v, tol, how) = f()?;
            Ok(GoldenEntry::new(v, tol, 0.0, how))
        }),
    }
}

/// Aitken extrapolation of three values at geometrically spaced points.
fn aitken(a: f64, b: f64, c: f64) -> f64 {
    let d = (c - b) - (b - a);
    if d == 0.0 {
        c
    } else {
        c - (c - b).powi(2) / d
    }
}

pub fn registry() -> Vec<OracleSpec> {
    let q = QuadratureSpec::default();
    let gauss = BoundedTestFunction::GaussianBump;
    let one = BoundedTestFunction::one();
    let lam1 = [("alpha", 1.5), ("lambda", 1.0)];
    let mut v = vec![
        det(key("u_lambda_zero", &lam1), move || {
            let raw = integral_power_kernel_raw(0.0, 1.0, &law(), &q)? / std::f64::consts::PI;
            let closed = u_lambda_zero(1.0, &law());
            Ok((raw, (raw - closed).abs().max(1e-8), "adaptive quadrature of 1/(1+t^alpha) over pi".into()))
        }),
        det(key("u_lambda", &[("alpha", 1.5), ("lambda", 1.0), ("x", 1.0)]), move || {
            Ok((u_lambda(1.0, 1.0, &law(), &q)?, 1e-10, "oscillatory Fourier quadrature".into()))
        }),
        det(key("laplace_hitting", &[("alpha", 1.5), ("lambda", 1.0), ("x", 1.0)]), move || {
            Ok((laplace_hitting(1.0, 1.0, &law(), &q)?, 1e-10, "ratio of two adaptive quadratures".into()))
        }),
        det(key("integral_power_kernel", &[("alpha", 1.5), ("gamma", 0.25), ("lambda", 2.0)]), move || {
            Ok((integral_power_kernel_raw(0.25, 2.0, &law(), &q)?, 1e-8, "adaptive quadrature".into()))
        }),
        det(key("one_minus_cos_integral", &[("alpha", 1.5), ("x", 1.0)]), move || {
            Ok((one_minus_cos_integral_raw(1.0, &law(), &q)?, 1e-8, "oscillatory quadrature".into()))
        }),
        det(key("a_const", &lam1), move || {
            let r = [1e-2, 1e-3, 1e-4]
                .map(|x| v_lambda_one(x, 1.0, &law(), &q).map(|v| v / x.powf(0.5)));
            let [a, b, c] = r;
            let e = aitken(a?, b?, c?);
            let closed = a_const(1.0, &law());
            Ok((closed, (e - closed).abs().max(1e-6) * 3.0, "closed form; checked by Aitken-extrapolated small-x quadrature".into()))
        }),
        det(key("b_const", &[("alpha", 1.5)]), || Ok((b_const(&law()), 1e-7, "printed closed form".into()))),
        det(key("b_const_tauberian", &[("alpha", 1.5)]), || {
            Ok((b_const_tauberian(&law()), 1e-7, "A(1,alpha)/Gamma(1/alpha)".into()))
        }),
        det(key("c_const", &[("alpha", 1.5), ("beta", 0.25), ("c_minus", 0.5), ("c_plus", 0.5)]), || {
            Ok((c_const(&law(), &star())?, 1e-6, "closed form".into()))
        }),
        det(key("inverse_c_pairing", &[("alpha", 1.5), ("beta", 0.25), ("c_minus", 0.5), ("c_plus", 0.5)]), move || {
            Ok((pairing_quadrature(&one, 1.0, &law(), &star(), None, &q)?, 1e-6, "log-stratified pairing quadrature".into()))
        }),
        det(key("limit_resolvent_at_zero_gaussian", &[("alpha", 1.5), ("beta", 0.25), ("lambda", 1.0)]), move || {
            Ok((limit_resolvent_at_zero(&gauss, 1.0, &law(), &star(), &q)?.value, 1e-7, "f = gaussian bump; pairing quadrature ratio".into()))
        }),
        det(key("stable_resolvent_at_zero_gaussian", &[("alpha", 1.5), ("lambda", 1.0)]), move || {
            Ok((stable_resolvent_at_zero(&gauss, 1.0, &law(), &q)?.value, 1e-10, "f = gaussian bump; Fourier quadrature".into()))
        }),
        det(key("reg_variation_exact", &[("p", 0.5), ("beta", 0.25), ("n", f64::INFINITY)]), || {
            let t = TailLaw::symmetric(0.25)?;
            Ok((reg_variation_exact(&BoundedTestFunction::MinPower { p: 0.5 }, &t, None).expect("min-power"), 1e-12, "exact integral".into()))
        }),
        det(key("reg_variation_exact", &[("p", 0.5), ("beta", 0.25), ("n", 1e4)]), || {
            let t = TailLaw::symmetric(0.25)?;
            Ok((reg_variation_exact(&BoundedTestFunction::MinPower { p: 0.5 }, &t, Some(1e4)).expect("min-power"), 1e-12, "exact integral".into()))
        }),
        det(key("identity_limit_resolvent", &[("alpha", 1.5), ("beta", 0.25)]), move || {
            Ok((limit_resolvent_at_zero(&one, 1.0, &law(), &star(), &q)?.value, 0.0, "f = 1".into()))
        }),
        det(key("identity_resolvent_zero_formula", &[("alpha", 1.5), ("beta", 0.25), ("n", 100.0)]), move || {
            let spec = PerturbedSpec {
                law: law(),
                jump: JumpLaw::Pareto(TailLaw::symmetric(0.25)?),
                n: 100.0,
                m: Some(10.0),
                x0: 0.0,
            };
            let v1 = VTable::new(&one, 1.0, &law(), &q)?;
            let r = resolvent_zero_formula(&one, 1.0, &spec, &v1, None, InnerV::Quadrature, 16, SeedTree::new(0))?;
            Ok((r.value, 0.0, "f = 1".into()))
        }),
        det(key("identity_excursion_formula", &[("alpha", 1.5), ("beta", 0.25), ("eps", 0.1)]), move || {
            let th = ThetaMeasure::new(&law(), 0.25, 0.5, 0.5, 0.1)?;
            let r = resolvent_at_zero_from_excursions(&one, 1.0, &th, &law(), &SynthesisBudget { paths: 1, dt: 0.05 }, &q, SeedTree::new(0))?;
            Ok((r.formula.value, 0.0, "f = 1".into()))
        }),
    ];
    v.push(OracleSpec {
        key: key("limit_resolvent_at_zero_gaussian_mc", &[("alpha", 1.5), ("beta", 0.25), ("lambda", 1.0)]),
        default_budget: 2000,
        run: Box::new(move |paths| {
            let law = law();
            let inner = InnerMethod::MonteCarlo { n_paths: paths, dt: 0.05, strata: 6 };
            let num = eta_pairing(&gauss, 1.0, &law, &star(), &q, &inner, SeedTree::new(0x5eed).child("oracle-pairing"))?;
            let den = pairing_quadrature(&one, 1.0, &law, &star(), None, &q)?;
            Ok(GoldenEntry::new(
                num.value / den,
                3.0 * num.stderr / den,
                num.stderr / den,
                format!("inner mc pairing, {paths} paths per node, quadrature denominator"),
            ))
        }),
    });
    v.push(OracleSpec {
        key: key("kappa", &[("alpha", 1.5), ("x0", 2.0), ("lambda", 1.0), ("dt", 0.01)]),
        default_budget: 120_000,
        run: Box::new(move |paths| {
            let law = law();
            let target = laplace_hitting(2.0, 1.0, &law, &q)?;
            let fit = calibrate_kappa(&law, 2.0, 1.0, 0.01, target, paths, SeedTree::new(0x5eed).child("oracle-kappa"));
            Ok(GoldenEntry::new(fit.kappa, 3.0 * fit.kappa_stderr, fit.kappa_stderr, format!("common-random-number bisection, {paths} paths")))
        }),
    });
    v
}

pub fn selected<'a>(reg: &'a [OracleSpec], keys: &[String]) -> Result<Vec<&'a OracleSpec>, CliError> {
    if keys.iter().any(|k| k == "all") {
        return Ok(reg.iter().collect());
    }
    let mut out = Vec::new();
    for k in keys {
        let hits: Vec<&OracleSpec> = reg.iter().filter(|o| o.key == *k || o.key.starts_with(&format!("{k}("))).collect();
        if hits.is_empty() {
            let known: Vec<&str> = reg.iter().map(|o| o.key.as_str()).collect();
            return Err(CliError::Validation(format!("unknown golden key `{k}`; known: {}", known.join(", "))));
        }
        out.extend(hits);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleLine {
    pub key: String,
    pub entry: GoldenEntry,
    pub drift_sigma: f64,
}

/// Regenerates `keys` with `multiplier`× default budgets. Nothing is written
/// to `store` if any key drifts by more than 3σ and `force` is unset.
pub fn regenerate(store: &mut GoldenStore, keys: &[String], multiplier: usize, force: bool) -> Result<Vec<OracleLine>, CliError> {
    let reg = registry();
    let chosen = selected(&reg, keys)?;
    let mut lines = Vec::new();
    for o in chosen {
        let entry = (o.run)(o.default_budget * multiplier)?;
        let drift = store.get(&o.key).map_or(0.0, |old| old.drift_sigma(&entry));
        lines.push(OracleLine {
            key: o.key.clone(),
            entry,
            drift_sigma: drift,
        });
    }
    let drifted: Vec<&OracleLine> = lines.iter().filter(|l| l.drift_sigma > 3.0).collect();
    if !drifted.is_empty() && !force {
        let report: Vec<String> = drifted
            .iter()
            .map(|l| format!("{}: stored {}, regenerated {} ({:.1} sigma)", l.key, store.get(&l.key).expect("present").value, l.entry.value, l.drift_sigma))
            .collect();
        return Err(CliError::Runtime(format!("drift alarm, store left unchanged:\n  {}", report.join("\n  "))));
    }
    for l in &lines {
        store.update(&l.key, l.entry.clone(), true)?;
    }
    Ok(lines)
}
