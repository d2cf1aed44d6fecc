use std::path::Path;

use skewstable::excursion::{
    export_skew_path, synthesize, zero_sojourn_fraction, MixtureSpec, SkewPathSidecar, ThetaMeasure,
};
use skewstable::perturbed::{
    convergence_experiment, exact_finite_n, ConvergenceBudget, MRule, PerturbedSpec,
};
use skewstable::potential::{
    a_const, a_const_printed, b_const, b_const_tauberian, c_const, hitting_convergence,
    integral_power_kernel, integral_power_kernel_raw, laplace_hitting, one_minus_cos_integral,
    one_minus_cos_integral_raw, pairing_quadrature, reg_variation_exact, reg_variation_ratio,
    u_lambda_zero, v_lambda_one, BoundedTestFunction, EtaMeasure, Normalization,
};
use skewstable::quad::QuadratureSpec;
use skewstable::rng::{map_streams, SeedTree};
use skewstable::stable::{calibrate_kappa, kappa, HittingRule, JumpLaw, StableLaw, TailLaw};
use skewstable::stats::ecf;

use crate::{num, CellSeed, CliError, ExperimentConfig, Gate, Kind, Outcome, Params, RuleKind, Table};

/// |gap| is non-increasing along the list up to 3 combined standard errors
/// per step.
pub fn gaps_decrease(gaps: &[f64], stderrs: &[f64]) -> bool {
    gaps.windows(2)
        .zip(stderrs.windows(2))
        .all(|(g, s)| g[1].abs() <= g[0].abs() + 3.0 * s[0].hypot(s[1]))
}

fn law(p: &Params) -> Result<StableLaw, CliError> {
    Ok(StableLaw::new(p.alpha)?)
}

fn tail(p: &Params) -> Result<TailLaw, CliError> {
    Ok(TailLaw::new(p.beta, p.c_minus, p.c_plus, p.x_min)?)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("invalid parameter `{name}`: {v} must be positive")))
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Validation(format!("invalid parameter `{name}`: must not be empty")))
    } else {
        Ok(())
    }
}

fn hit_rule(p: &Params, law: &StableLaw, dt: f64) -> HittingRule {
    match p.rule {
        RuleKind::Nominal => HittingRule::nominal(law, dt, p.lambda),
        RuleKind::Corrected => HittingRule::corrected(law, dt, p.lambda),
    }
}

fn mixture(p: &Params, theta: &ThetaMeasure, law: &StableLaw, q: &QuadratureSpec) -> Result<MixtureSpec, CliError> {
    let mut mix = if p.p == 1.0 {
        MixtureSpec::pure_jump(theta)
    } else {
        MixtureSpec::calibrated(theta, p.p, p.delta.unwrap_or(p.eps / 10.0), law, q)?
    };
    if let Some(d) = p.delta {
        mix.delta = d;
    }
    mix.validate()?;
    Ok(mix)
}

/// Parameter checks per experiment kind, before any work is done.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let p = &cfg.params;
    match cfg.kind {
        Kind::Report => {
            if p.run_dir.is_none() {
                return Err(CliError::Validation("invalid parameter `run_dir`: required for kind report".into()));
            }
            return Ok(());
        }
        Kind::QuadratureCheck => return Ok(()),
        _ => {}
    }
    let law = law(p)?;
    positive("lambda", p.lambda)?;
    match cfg.kind {
        Kind::Constants => {
            EtaMeasure::new(p.beta, p.c_minus, p.c_plus, Normalization::Star)?.validate()?;
            if !(p.beta < p.alpha - 1.0) {
                return Err(CliError::Validation(format!(
                    "invalid parameter `beta`: the constant C needs beta < alpha - 1 = {}",
                    p.alpha - 1.0
                )));
            }
        }
        Kind::HittingCalibration => {
            nonempty("dt_list", &p.dt_list)?;
            for dt in &p.dt_list {
                positive("dt_list", *dt)?;
            }
            positive("paths", p.paths as f64)?;
        }
        Kind::ResolventConverge => {
            let Some(rule) = p.m_rule else {
                return Err(CliError::Validation("invalid parameter `m_rule`: required (\"a\" or \"b\")".into()));
            };
            rule.validate(&law, &JumpLaw::Pareto(tail(p)?))?;
            nonempty("n_list", &p.n_list)?;
            for n in &p.n_list {
                positive("n_list", *n)?;
            }
            positive("paths", p.paths as f64)?;
            positive("dt", p.dt)?;
        }
        Kind::ExcursionSynthesize => {
            let theta = ThetaMeasure::new(&law, p.beta, p.c_minus, p.c_plus, p.eps)?;
            positive("horizon", p.horizon)?;
            positive("dt", p.dt)?;
            positive("paths", p.paths as f64)?;
            nonempty("h_probe", &p.h_probe)?;
            let rule = hit_rule(p, &law, p.dt);
            if !(theta.eps > rule.h) {
                return Err(CliError::Validation(format!(
                    "invalid parameter `eps`: {} must exceed the absorption half-width {}",
                    theta.eps, rule.h
                )));
            }
            if !(0.0..=1.0).contains(&p.p) {
                return Err(CliError::Validation(format!("invalid parameter `p`: {} is outside [0, 1]", p.p)));
            }
            if let Some(d) = p.delta {
                positive("delta", d)?;
            }
        }
        Kind::RegVariation => {
            tail(p)?;
            nonempty("scales", &p.scales)?;
            for n in &p.scales {
                positive("scales", *n)?;
            }
            positive("paths", p.paths as f64)?;
        }
        Kind::QuadratureCheck | Kind::Report => unreachable!(),
    }
    Ok(())
}

pub fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome, CliError> {
    let seeds = SeedTree::new(cfg.master_seed).child(cfg.kind.label());
    let q = QuadratureSpec::default();
    match cfg.kind {
        Kind::Constants => constants(&cfg.params, &q),
        Kind::QuadratureCheck => quadrature_check(&q),
        Kind::HittingCalibration => hitting(&cfg.params, &q, seeds),
        Kind::ResolventConverge => converge(&cfg.params, &q, seeds),
        Kind::ExcursionSynthesize => excursion(&cfg.params, &q, seeds, cfg.master_seed, dir),
        Kind::RegVariation => regvar(&cfg.params, seeds),
        Kind::Report => {
            let run_dir = cfg.params.run_dir.as_deref().expect("validated");
            let written = crate::report::write_report(Path::new(run_dir))?;
            let mut o = Outcome::default();
            o.gates.push(Gate::new("report", true, written.display().to_string()));
            Ok(o)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn constants(p: &Params, q: &QuadratureSpec) -> Result<Outcome, CliError> {
    let law = law(p)?;
    let lam = p.lambda;
    let eta = EtaMeasure::new(p.beta, p.c_minus, p.c_plus, Normalization::Star)?;
    let mut t = Table::new("constants", &["quantity", "value", "cross_check", "cross_value", "rel_gap"]);
    let mut row = |name: &str, v: f64, check: &str, c: Option<f64>| {
        t.push(vec![
            name.into(),
            num(v),
            check.into(),
            c.map_or(String::new(), num),
            c.map_or(String::new(), |c| num(rel(v, c))),
        ]);
    };
    let u0 = u_lambda_zero(lam, &law);
    row("u_lambda(0)", u0, "power-kernel integral / pi", Some(integral_power_kernel(0.0, lam, &law)? / std::f64::consts::PI));
    let a = a_const(lam, &law);
    let probes = [1e-2, 1e-3, 1e-4];
    let mut ratios = Vec::new();
    for x in probes {
        let r = lam * v_lambda_one(x, lam, &law, q)? / x.powf(p.alpha - 1.0);
        ratios.push(r);
        row(&format!("lambda*V1(x)/x^(alpha-1) at x={x:e}"), r, "A", Some(a));
    }
    row("A", a, "small-x quotient at x=1e-4", Some(ratios[2]));
    row("A (printed form)", a_const_printed(lam, &law), "", None);
    row("B (printed form)", b_const(&law), "A(1)/Gamma(1/alpha)", Some(b_const_tauberian(&law)));
    row("B (tail)", b_const_tauberian(&law), "", None);
    let c = c_const(&law, &eta)?;
    let pairing = pairing_quadrature(&BoundedTestFunction::one(), 1.0, &law, &eta, None, q)?;
    row("C", c, "1 / pairing quadrature", Some(1.0 / pairing));
    row("1/C", 1.0 / c, "pairing quadrature", Some(pairing));

    let gaps: Vec<f64> = ratios.iter().map(|r| (r - a).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        tables: vec![t],
        gates: vec![
            Gate::new(
                "C closed form vs pairing",
                rel(1.0 / c, pairing) < 1e-6,
                format!("1/C = {}, pairing = {}, rel {:.2e}", 1.0 / c, pairing, rel(1.0 / c, pairing)),
            ),
            Gate::new(
                "small-x approach to A",
                monotone && rel(ratios[2], a) < 1e-2,
                format!("gaps {gaps:?}, final rel {:.2e}", rel(ratios[2], a)),
            ),
        ],
        ..Default::default()
    })
}

fn quadrature_check(q: &QuadratureSpec) -> Result<Outcome, CliError> {
    let mut t = Table::new(
        "lattice",
        &["form", "alpha", "gamma", "lambda", "x", "closed", "quadrature", "abs_diff"],
    );
    let mut worst: f64 = 0.0;
    for alpha in [1.2, 1.5, 1.8] {
        let law = StableLaw::new(alpha)?;
        for frac in [0.0, 0.25, 0.5, 0.9] {
            let gamma = frac * (alpha - 1.0);
            for lam in [0.5, 1.0, 2.0] {
                let c = integral_power_kernel(gamma, lam, &law)?;
                let r = integral_power_kernel_raw(gamma, lam, &law, q)?;
                worst = worst.max((c - r).abs());
                t.push(vec!["power-kernel".into(), num(alpha), num(gamma), num(lam), String::new(), num(c), num(r), num((c - r).abs())]);
            }
        }
        for x in [0.1, 1.0, 10.0] {
            let c = one_minus_cos_integral(x, &law);
            let r = one_minus_cos_integral_raw(x, &law, q)?;
            worst = worst.max((c - r).abs());
            t.push(vec!["one-minus-cos".into(), num(alpha), String::new(), String::new(), num(x), num(c), num(r), num((c - r).abs())]);
        }
    }
    Ok(Outcome {
        tables: vec![t],
        gates: vec![Gate::new("closed vs quadrature", worst < 1e-8, format!("max abs diff {worst:.2e}"))],
        ..Default::default()
    })
}

fn hitting(p: &Params, q: &QuadratureSpec, seeds: SeedTree) -> Result<Outcome, CliError> {
    let law = law(p)?;
    let rows = hitting_convergence(
        p.x0,
        p.lambda,
        &law,
        &p.dt_list,
        p.rule == RuleKind::Corrected,
        p.paths,
        q,
        seeds.child("convergence"),
    )?;
    let mut o = Outcome::default();
    let mut t = Table::new("hitting", &["dt", "h", "estimate", "stderr", "target", "gap", "censored", "n_paths", "seed"]);
    for r in &rows {
        t.push(vec![num(r.dt), num(r.h), num(r.estimate), num(r.stderr), num(r.target), num(r.gap), r.censored.to_string(), r.n_paths.to_string(), r.seed.to_string()]);
        o.cells.push(CellSeed::new(format!("dt={}", r.dt), r.seed));
        o.censoring.insert(format!("dt={}", r.dt), r.censored as u64);
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let ses: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let last = rows.last().expect("nonempty");
    o.gates.push(Gate::new("gaps decrease under refinement", gaps_decrease(&gaps, &ses), format!("gaps {gaps:?}")));
    o.gates.push(Gate::new(
        "final gap within 3 stderr",
        last.gap.abs() < 3.0 * last.stderr,
        format!("gap {:.3e}, stderr {:.3e}", last.gap, last.stderr),
    ));
    o.tables.push(t);
    if p.kappa_paths > 0 {
        let dt = p.dt_list[0];
        let target = laplace_hitting(p.x0, p.lambda, &law, q)?;
        let k = seeds.child("kappa");
        let fit = calibrate_kappa(&law, p.x0, p.lambda, dt, target, p.kappa_paths, k);
        let frozen = kappa(p.alpha);
        let mut kt = Table::new("kappa", &["alpha", "x0", "dt", "kappa_fit", "kappa_stderr", "kappa_frozen", "n_paths"]);
        kt.push(vec![num(p.alpha), num(p.x0), num(dt), num(fit.kappa), num(fit.kappa_stderr), num(frozen), fit.n_paths.to_string()]);
        o.tables.push(kt);
        o.cells.push(CellSeed::new("kappa", k.key()));
        o.gates.push(Gate::new(
            "frozen kappa within 3 stderr of refit",
            (fit.kappa - frozen).abs() < 3.0 * fit.kappa_stderr,
            format!("fit {:.4} ± {:.4}, frozen {frozen}", fit.kappa, fit.kappa_stderr),
        ));
    }
    Ok(o)
}

fn converge(p: &Params, q: &QuadratureSpec, seeds: SeedTree) -> Result<Outcome, CliError> {
    let law = law(p)?;
    let rule: MRule = p.m_rule.expect("validated");
    let base = PerturbedSpec {
        law,
        jump: JumpLaw::Pareto(tail(p)?),
        n: 1.0,
        m: None,
        x0: 0.0,
    };
    let budget = ConvergenceBudget {
        paths: p.paths,
        nested: p.nested,
        dt: p.dt,
    };
    let rows = convergence_experiment(&p.f, p.lambda, &base, &p.n_list, rule, &budget, q, seeds)?;
    let exact = exact_finite_n(&p.f, p.lambda, &base, &p.n_list, rule, q)?;
    let mut o = Outcome::default();
    let mut t = Table::new(
        "convergence",
        &["n", "m_n", "lambda", "f", "estimate", "stderr", "target", "gap", "exact", "exact_gap", "n_paths", "seed"],
    );
    for (r, e) in rows.iter().zip(&exact) {
        t.push(vec![
            num(r.n), num(r.m_n), num(r.lambda), r.f_tag.clone(), num(r.estimate), num(r.stderr),
            num(r.target), num(r.gap), num(e.exact), num(e.gap), r.n_paths.to_string(), r.seed.to_string(),
        ]);
        o.cells.push(CellSeed::new(format!("n={}", r.n), r.seed));
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let ses: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let last = rows.last().expect("nonempty");
    o.gates.push(Gate::new("gaps decrease in n", gaps_decrease(&gaps, &ses), format!("gaps {gaps:?}")));
    o.gates.push(Gate::new(
        "final gap within 3 stderr",
        last.gap.abs() < 3.0 * last.stderr,
        format!("gap {:.3e}, stderr {:.3e}, exact finite-n gap {:.3e}", last.gap, last.stderr, exact.last().expect("nonempty").gap),
    ));
    o.tables.push(t);
    Ok(o)
}

struct PathSummary {
    atoms: usize,
    phi_end: f64,
    s_end: f64,
    u_mid: f64,
    u_end: f64,
    x_end: f64,
    sojourn: Vec<f64>,
    horizon: f64,
    censored: bool,
}

/// Intercept of the least-squares line through (x_i, y_i) and its standard
/// error from independent per-point errors.
pub fn extrapolate_to_zero(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let w: Vec<f64> = x.iter().map(|xi| 1.0 / n - mx * (xi - mx) / sxx).collect();
    let value = w.iter().zip(y).map(|(a, b)| a * b).sum();
    let var: f64 = w.iter().zip(se).map(|(a, s)| (a * s).powi(2)).sum();
    (value, var.sqrt())
}

fn excursion(p: &Params, q: &QuadratureSpec, seeds: SeedTree, master: u64, dir: &Path) -> Result<Outcome, CliError> {
    let law = law(p)?;
    let theta = ThetaMeasure::new(&law, p.beta, p.c_minus, p.c_plus, p.eps)?;
    let mix = mixture(p, &theta, &law, q)?;
    let rule = hit_rule(p, &law, p.dt);
    let t_end = p.horizon;
    let t_mid = 0.5 * t_end;
    let paths = seeds.child("paths");
    let runs = map_streams(paths, p.paths, |i, _| -> Result<PathSummary, skewstable::Error> {
        let path = synthesize(&theta, &mix, t_end, &law, p.dt, &rule, paths.at(i as u64))?;
        let u = path.residual();
        let j = path.index_at(t_end);
        if i < p.export_paths {
            let side = SkewPathSidecar::describe(&path, p.alpha, &theta.eta, master);
            export_skew_path(&path, &side, dir, &format!("path_{i:03}"))?;
        }
        Ok(PathSummary {
            atoms: path.atoms.len(),
            phi_end: path.phi[j],
            s_end: path.s_at_phi[j],
            u_mid: u[path.index_at(t_mid)],
            u_end: u[j],
            x_end: path.values[j],
            sojourn: p.h_probe.iter().map(|&h| zero_sojourn_fraction(&path, h)).collect(),
            horizon: path.horizon,
            censored: path.censored,
        })
    });
    let runs: Vec<PathSummary> = runs.into_iter().collect::<Result<_, _>>()?;
    let n = runs.len() as f64;
    let mut o = Outcome::default();
    o.cells.push(CellSeed::new("paths", paths.key()));
    o.censoring.insert("censored_paths".into(), runs.iter().filter(|r| r.censored).count() as u64);
    for i in 0..p.export_paths.min(p.paths) {
        o.files.push(format!("path_{i:03}.csv"));
        o.files.push(format!("path_{i:03}.json"));
    }

    let mut pt = Table::new("paths", &["path", "atoms", "phi_T", "S_at_phi_T", "U_mid", "U_T", "X_T", "horizon", "censored"]);
    for (i, r) in runs.iter().enumerate() {
        pt.push(vec![i.to_string(), r.atoms.to_string(), num(r.phi_end), num(r.s_end), num(r.u_mid), num(r.u_end), num(r.x_end), num(r.horizon), r.censored.to_string()]);
    }

    let tol = 4.0 / n.sqrt();
    let mut cf = Table::new("residual_cf", &["t", "z", "re", "im", "target", "abs_gap", "tol"]);
    let mut cf_ok = true;
    let mut worst: f64 = 0.0;
    for (t, vals) in [(t_mid, runs.iter().map(|r| r.u_mid).collect::<Vec<_>>()), (t_end, runs.iter().map(|r| r.u_end).collect())] {
        for z in [0.5, 1.0, 2.0] {
            let (re, im) = ecf(&vals, z);
            let target = (-t * f64::powf(z, p.alpha)).exp();
            let gap = (re - target).hypot(im);
            worst = worst.max(gap);
            cf_ok &= gap < tol;
            cf.push(vec![num(t), num(z), num(re), num(im), num(target), num(gap), num(tol)]);
        }
    }
    let corr = correlation(&runs.iter().map(|r| r.u_end).collect::<Vec<_>>(), &runs.iter().map(|r| r.s_end).collect::<Vec<_>>());

    let mut sj = Table::new("sojourn", &["h_probe", "scaled", "occupation_scaled", "mean_fraction", "stderr"]);
    let expo = p.alpha - 1.0 - p.beta;
    // occupation of [−h, h] by excursions entering at |x| ≲ h
    let occ = p.alpha - p.beta;
    let (mut xs, mut xo, mut ys, mut ses) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, &h) in p.h_probe.iter().enumerate() {
        let v: Vec<f64> = runs.iter().map(|r| r.sojourn[k]).collect();
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        sj.push(vec![num(h), num(h.powf(expo)), num(h.powf(occ)), num(mean), num(se)]);
        xs.push(h.powf(expo));
        xo.push(h.powf(occ));
        ys.push(mean);
        ses.push(se);
    }
    let monotone = ys.windows(2).all(|w| w[1] <= w[0]);
    o.tables.extend([pt, cf, sj]);
    o.gates.push(Gate::new("residual CF matches the stable law", cf_ok, format!("worst |gap| {worst:.3e}, tol {tol:.3e}")));
    o.gates.push(Gate::new(
        "residual uncorrelated with S(phi)",
        corr.abs() < 3.0 / n.sqrt(),
        format!("corr {corr:.3e}, bound {:.3e}", 3.0 / n.sqrt()),
    ));
    o.gates.push(Gate::new("sojourn fraction decreases with h_probe", monotone, format!("means {ys:?}")));
    if xs.len() >= 2 {
        let (v, se) = extrapolate_to_zero(&xs, &ys, &ses);
        let (vo, so) = extrapolate_to_zero(&xo, &ys, &ses);
        o.gates.push(Gate::new(
            "extrapolated zero sojourn",
            v.abs() < 2.0 * se,
            format!("intercept {v:.3e}, stderr {se:.3e} in h^{expo}; {vo:.3e}, stderr {so:.3e} in h^{occ}"),
        ));
    }
    Ok(o)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn regvar(p: &Params, seeds: SeedTree) -> Result<Outcome, CliError> {
    let tail = tail(p)?;
    let limit = reg_variation_exact(&p.g, &tail, None);
    let mut o = Outcome::default();
    let mut t = Table::new("reg_variation", &["n", "estimate", "stderr", "exact_finite_n", "limit", "rel_gap_to_limit"]);
    let mut last = None;
    for (i, &n) in p.scales.iter().enumerate() {
        let cell = seeds.at(i as u64);
        let r = reg_variation_ratio(&p.g, &tail, n, p.paths, cell);
        let exact = reg_variation_exact(&p.g, &tail, Some(n));
        let gap = limit.map(|l| rel(r.value, l));
        t.push(vec![num(n), num(r.value), num(r.stderr), exact.map_or(String::new(), num), limit.map_or(String::new(), num), gap.map_or(String::new(), num)]);
        o.cells.push(CellSeed::new(format!("n={n}"), cell.key()));
        last = Some((r, gap));
    }
    o.tables.push(t);
    if let (Some((r, Some(gap))), Some(l)) = (last, limit) {
        o.gates.push(Gate::new(
            "largest scale within 5% of the limit",
            gap < 0.05,
            format!("estimate {} ± {}, limit {l}, rel gap {gap:.4}", r.value, r.stderr),
        ));
    }
    Ok(o)
}
