//! The process perturbed at zero, X_ζ, and its holding-and-jumping variant
//! X_{ζ,m}: trajectories, resolvents at the origin and convergence tables.

mod experiment;

pub use experiment::{
    convergence_experiment, exact_finite_n, write_convergence_csv, ConvergenceBudget,
    ConvergenceRow, ExactRow, MRule,
};

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::potential::{
    estimate_v_lambda, BoundedTestFunction, ResolventEstimate, VTable,
};
use crate::rng::{map_streams, SeedTree, Stream};
use crate::stable::{HittingRule, JumpLaw, StableLaw, Walk};
use crate::stats::ratio_estimate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedSpec {
    pub law: StableLaw,
    pub jump: JumpLaw,
    /// Jumps are ζ_k/n.
    pub n: f64,
    /// Holding rate at 0; None gives X_ζ.
    pub m: Option<f64>,
    pub x0: f64,
}

impl PerturbedSpec {
    pub fn validate(&self) -> Result<()> {
        self.jump.validate()?;
        if !(self.n >= 1.0) || !self.n.is_finite() {
            return Err(domain("n", format!("{} must be at least 1", self.n)));
        }
        if let Some(m) = self.m {
            if !(m > 0.0) || !m.is_finite() {
                return Err(domain("m", format!("{m} must be positive")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn jump(&self, rng: &mut Stream) -> f64 {
        self.jump.sample(rng) / self.n
    }
}

/// Glued trajectory. Times are nondecreasing; a repeated time marks a jump
/// (value before, then value after).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbedPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub touch_times: Vec<f64>,
    pub jumps_used: Vec<f64>,
    pub hold_times: Vec<f64>,
    /// Some inter-touch segment ran longer than the rule's t_cap.
    pub censored: bool,
}

impl PerturbedPath {
    /// Right-continuous value at time t.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.values[k.saturating_sub(1)]
    }

    pub fn total_hold(&self) -> f64 {
        self.hold_times.iter().sum()
    }
}

/// Event-driven simulation to `horizon`, emitting (t, x) points to `visit`
/// and (touch time, hold, jump) to `on_touch`; returns the censoring flag.
fn drive(
    spec: &PerturbedSpec,
    dt: f64,
    rule: &HittingRule,
    horizon: f64,
    rng: &mut Stream,
    mut visit: impl FnMut(f64, f64),
    mut on_touch: impl FnMut(f64, f64, f64),
) -> bool {
    let hold_law = spec.m.map(|m| Exp::new(m).expect("validated rate"));
    let mut censored = false;
    let mut t = 0.0;
    let mut x = spec.x0;
    let mut check_start = true;
    visit(t, x);
    loop {
        let walk = Walk::uniform(
            &spec.law,
            dt,
            HittingRule {
                h: rule.h,
                t_cap: horizon - t,
            },
        );
        let t0 = t;
        let out = walk.run_from(x, check_start, rng, |s, y| {
            if s > 0.0 {
                visit(t0 + s, y)
            }
        });
        t = t0 + out.t_end;
        x = out.x_end;
        censored |= out.t_end > rule.t_cap;
        if out.sigma.is_none() {
            return censored;
        }
        let mut hold = 0.0;
        if let Some(law) = &hold_law {
            hold = law.sample(rng).min(horizon - t);
            if x != 0.0 {
                visit(t, 0.0);
            }
            t += hold;
            visit(t, 0.0);
            if t >= horizon {
                on_touch(t - hold, hold, f64::NAN);
                return censored;
            }
        }
        let j = spec.jump(rng);
        on_touch(t - hold, hold, j);
        x = j;
        visit(t, x);
        check_start = false;
    }
}

fn simulate(
    spec: &PerturbedSpec,
    dt: f64,
    horizon: f64,
    rule: &HittingRule,
    rng: &mut Stream,
) -> PerturbedPath {
    let mut p = PerturbedPath::default();
    let mut touches = Vec::new();
    let censored = drive(
        spec,
        dt,
        rule,
        horizon,
        rng,
        |t, x| {
            p.times.push(t);
            p.values.push(x);
        },
        |t, hold, j| touches.push((t, hold, j)),
    );
    for (t, hold, j) in touches {
        p.touch_times.push(t);
        if spec.m.is_some() {
            p.hold_times.push(hold);
        }
        if j.is_finite() {
            p.jumps_used.push(j);
        }
    }
    p.censored = censored;
    p
}

/// X_ζ on [0, horizon]: a stable path restarted from ζ_k/n at each detected
/// touch of 0.
pub fn simulate_x_zeta(
    spec: &PerturbedSpec,
    dt: f64,
    horizon: f64,
    rule: &HittingRule,
    rng: &mut Stream,
) -> Result<PerturbedPath> {
    spec.validate()?;
    if spec.m.is_some() {
        return Err(domain("m", "X_ζ has no holding; use simulate_x_zeta_m"));
    }
    if spec.x0 == 0.0 {
        return Err(domain("x0", "X_ζ must start away from 0"));
    }
    Ok(simulate(spec, dt, horizon, rule, rng))
}

/// X_{ζ,m}: as X_ζ with an exponential hold of mean 1/m at 0 before each
/// jump. A start at 0 begins with a hold.
pub fn simulate_x_zeta_m(
    spec: &PerturbedSpec,
    dt: f64,
    horizon: f64,
    rule: &HittingRule,
    rng: &mut Stream,
) -> Result<PerturbedPath> {
    spec.validate()?;
    if spec.m.is_none() {
        return Err(domain("m", "holding rate required"));
    }
    Ok(simulate(spec, dt, horizon, rule, rng))
}

/// λ·E^{x0}∫₀^{40/λ} e^{−λt} f(X_t) dt along simulated trajectories.
pub fn resolvent_mc(
    f: &BoundedTestFunction,
    lambda: f64,
    spec: &PerturbedSpec,
    dt: f64,
    rule: &HittingRule,
    n_paths: usize,
    seeds: SeedTree,
) -> Result<ResolventEstimate> {
    spec.validate()?;
    let horizon = 40.0 / lambda;
    let runs = map_streams(seeds, n_paths, |_, rng| {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        let censored = drive(
            spec,
            dt,
            rule,
            horizon,
            rng,
            |t, x| {
                let g = (-lambda * t).exp() * f.eval(x);
                if let Some((t0, g0)) = prev {
                    acc += 0.5 * (t - t0) * (g + g0);
                }
                prev = Some((t, g));
            },
            |_, _, _| {},
        );
        (lambda * acc, censored)
    });
    let m: crate::stats::Moments = runs.iter().map(|r| r.0).collect();
    let censored = runs.iter().filter(|r| r.1).count();
    Ok(ResolventEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_paths,
        lambda,
        meta: format!("trajectory mc dt={dt} h={:.3e} horizon={horizon} censored={censored}", rule.h),
    })
}

/// Evaluation of V_λf(ζ/n) inside the formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnerV {
    /// Deterministic quadrature through a tabulated V_λf.
    Quadrature,
    /// Nested Monte Carlo with `paths` killed walks per ζ draw.
    MonteCarlo { paths: usize, dt: f64 },
}

/// λR_λ^{ζ,m}f(0) = (f(0)/m + E V_λf(ζ/n)) / (1/m + E V_λ1(ζ/n)), with
/// V_λ1 always deterministic and the same ζ draws in both averages.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_zero_formula(
    f: &BoundedTestFunction,
    lambda: f64,
    spec: &PerturbedSpec,
    v_one: &VTable,
    v_f: Option<&VTable>,
    inner: InnerV,
    n_draws: usize,
    seeds: SeedTree,
) -> Result<ResolventEstimate> {
    spec.validate()?;
    let m = spec
        .m
        .ok_or_else(|| domain("m", "the formula needs a holding rate"))?;
    if !v_one.function().is_constant_one() || v_one.lambda() != lambda {
        return Err(domain("v_one", "table must hold V_λ1 at the same λ"));
    }
    if n_draws == 0 {
        return Err(domain("n_draws", "must be at least 1"));
    }
    let one = f.is_constant_one();
    if !one && inner == InnerV::Quadrature && v_f.map(|t| t.function() != f).unwrap_or(true) {
        return Err(domain("v_f", "quadrature inner method needs a table for f"));
    }
    let zeta_seeds = seeds.child("zeta");
    let inner_seeds = seeds.child("inner");
    let pairs = map_streams(zeta_seeds, n_draws, |i, rng| {
        let x = spec.jump(rng);
        let den = 1.0 / m + v_one.eval(x);
        if one {
            return (den, den);
        }
        let vf = match inner {
            InnerV::Quadrature => v_f.unwrap().eval(x),
            InnerV::MonteCarlo { paths, dt } => {
                let walk = Walk::for_start(&spec.law, dt, x, lambda);
                estimate_v_lambda(f, x, lambda, &walk, paths, inner_seeds.at(i as u64))
                    .map(|e| e.value)
                    .unwrap_or(f64::NAN)
            }
        };
        (f.eval(0.0) / m + vf, den)
    });
    let (num, den): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let (value, stderr) = if one {
        (1.0, 0.0)
    } else {
        ratio_estimate(&num, &den)
    };
    let inner_paths = match inner {
        InnerV::MonteCarlo { paths, .. } if !one => paths,
        _ => 0,
    };
    Ok(ResolventEstimate {
        value,
        stderr,
        n_paths: n_draws * inner_paths.max(1),
        lambda,
        meta: format!("holding formula m={m} n={} draws={n_draws} inner={inner:?}", spec.n),
    })
}
