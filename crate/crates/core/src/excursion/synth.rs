use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MixtureSpec, ThetaMeasure};
use crate::error::{domain, Error, Result};
use crate::potential::{
    limit_resolvent_at_zero, pairing_quadrature, BoundedTestFunction, ResolventEstimate,
};
use crate::quad::QuadratureSpec;
use crate::rng::{map_streams, SeedTree, Stream};
use crate::stable::{HittingRule, StableLaw, Walk};
use crate::stats::Moments;

/// One excursion away from 0: a stable walk from `x0` killed on the band.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcursionAtom {
    pub s: f64,
    pub x0: f64,
    /// Grid values from x0 up to and including the absorbing sample.
    pub values: Vec<f64>,
    pub dt: f64,
    /// Length in process time; equals t_cap when censored.
    pub sigma: f64,
    pub censored: bool,
}

pub fn sample_excursion_from(
    x0: f64,
    law: &StableLaw,
    dt: f64,
    rule: &HittingRule,
    rng: &mut Stream,
) -> Result<ExcursionAtom> {
    if x0.abs() <= rule.h {
        return Err(Error::DegenerateExcursion { x0, h: rule.h });
    }
    let mut values = Vec::new();
    let out = Walk::uniform(law, dt, *rule).run(x0, rng, |_, x| values.push(x));
    Ok(ExcursionAtom {
        s: 0.0,
        x0,
        values,
        dt,
        sigma: out.sigma.unwrap_or(rule.t_cap),
        censored: out.sigma.is_none(),
    })
}

/// Atoms (s_k, x_k) of a Poisson point measure with intensity ds × θ^{(ε)}
/// on [0, s_max], sorted by s.
pub fn sample_atom_marks(theta: &ThetaMeasure, s_max: f64, rng: &mut Stream) -> Vec<(f64, f64)> {
    let mean = theta.mass() * s_max;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut s: Vec<f64> = (0..count).map(|_| s_max * rng.random::<f64>()).collect();
    s.sort_by(f64::total_cmp);
    s.into_iter().map(|s| (s, theta.sample_mark(rng))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomKind {
    /// Entrance by a jump, mark drawn from θ^{(ε)}.
    Jump,
    /// Start at ±δ standing in for the continuous entrance.
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub s: f64,
    pub x0: f64,
    pub kind: AtomKind,
    /// τ(s−), the process time at which the excursion starts.
    pub tau_before: f64,
    /// Length used in the glued path.
    pub sigma: f64,
    pub censored: bool,
    /// Cut by the horizon before absorption.
    pub open: bool,
}

/// Synthesized skew process on a grid of step `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewPath {
    pub dt: f64,
    /// Requested horizon, or the end of the last uncensored coverage.
    pub horizon: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Local time φ(t) on the grid.
    pub phi: Vec<f64>,
    /// S_θ(φ(t)) on the grid.
    pub s_at_phi: Vec<f64>,
    pub atoms: Vec<AtomRecord>,
    /// S_θ just after each atom.
    pub sub_values: Vec<f64>,
    pub p: f64,
    pub delta: f64,
    pub eps: f64,
    pub censored: bool,
}

impl SkewPath {
    /// τ(s) = Σ_{s_k ≤ s} σ_k.
    pub fn tau(&self, s: f64) -> f64 {
        self.atoms
            .iter()
            .take_while(|a| a.s <= s)
            .map(|a| a.sigma)
            .sum()
    }

    /// Residual U(t) = X(t) − S_θ(φ(t)) on the grid.
    pub fn residual(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.s_at_phi)
            .map(|(x, s)| x - s)
            .collect()
    }

    pub fn index_at(&self, t: f64) -> usize {
        ((t / self.dt).round() as usize).min(self.values.len() - 1)
    }

    /// τ(s_k) for each atom, cumulative in local-time order.
    pub fn tau_after(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .scan(0.0, |acc, a| {
                *acc += a.sigma;
                Some(*acc)
            })
            .collect()
    }

    pub fn jump_marks(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms
            .iter()
            .filter(|a| a.kind == AtomKind::Jump)
            .map(|a| a.x0)
    }
}

/// φ(t) = inf{s : τ(s) > t} for a pure-jump τ given by atom coordinates
/// `s` and cumulative lengths `tau_after`; clamped to the last atom.
pub fn phi_at(s: &[f64], tau_after: &[f64], t: f64) -> f64 {
    let k = tau_after.partition_point(|&v| v <= t);
    s[k.min(s.len() - 1)]
}

struct Drawn {
    s: f64,
    kind: AtomKind,
    x0: f64,
    values: Vec<f64>,
    hit: bool,
}

/// Local-time ordered atoms with their excursions, generated in parallel
/// batches from per-atom streams. Batch boundaries do not affect the draws.
struct AtomSource<'a> {
    theta: &'a ThetaMeasure,
    mix: &'a MixtureSpec,
    rate: f64,
    walk: Walk,
    seeds: SeedTree,
    next: u64,
    batch: u64,
    s: f64,
}

impl AtomSource<'_> {
    fn next_batch(&mut self) -> Vec<Drawn> {
        let (theta, mix, rate, walk, seeds) = (self.theta, self.mix, self.rate, &self.walk, self.seeds);
        let jump_rate = mix.p * theta.mass();
        let raw: Vec<(f64, Drawn)> = (self.next..self.next + self.batch)
            .into_par_iter()
            .map(|k| {
                let rng = &mut seeds.stream(k);
                let gap = Exp::new(rate).expect("positive rate").sample(rng);
                let (kind, x0) = if rng.random::<f64>() * rate < jump_rate {
                    (AtomKind::Jump, theta.sample_mark(rng))
                } else if rng.random::<bool>() {
                    (AtomKind::Continuous, mix.delta)
                } else {
                    (AtomKind::Continuous, -mix.delta)
                };
                let mut values = Vec::new();
                let out = walk.run(x0, rng, |_, x| values.push(x));
                let hit = out.sigma.is_some();
                (gap, Drawn { s: 0.0, kind, x0, values, hit })
            })
            .collect();
        self.next += self.batch;
        self.batch = (self.batch * 2).min(4096);
        raw.into_iter()
            .map(|(gap, mut d)| {
                self.s += gap;
                d.s = self.s;
                d
            })
            .collect()
    }
}

/// Sequential fold of atoms into one grid path, keeping jump atoms with
/// |x| > eps.
struct Gluer {
    eps: f64,
    n_grid: usize,
    dt: f64,
    values: Vec<f64>,
    owner: Vec<usize>,
    atoms: Vec<AtomRecord>,
    sub: Vec<f64>,
    s_total: f64,
    end: usize,
    censored: bool,
    done: bool,
}

impl Gluer {
    fn new(eps: f64, n_grid: usize, dt: f64) -> Self {
        Self {
            eps,
            n_grid,
            dt,
            values: Vec::with_capacity(n_grid + 1),
            owner: Vec::with_capacity(n_grid + 1),
            atoms: Vec::new(),
            sub: Vec::new(),
            s_total: 0.0,
            end: n_grid,
            censored: false,
            done: false,
        }
    }

    fn push(&mut self, d: &Drawn) {
        if self.done || (d.kind == AtomKind::Jump && d.x0.abs() <= self.eps) {
            return;
        }
        if d.kind == AtomKind::Jump {
            self.s_total += d.x0;
        }
        let i = self.values.len();
        let remaining = self.n_grid - i;
        let steps = d.values.len() - 1;
        let k = self.atoms.len();
        let mut rec = AtomRecord {
            s: d.s,
            x0: d.x0,
            kind: d.kind,
            tau_before: i as f64 * self.dt,
            sigma: steps as f64 * self.dt,
            censored: false,
            open: false,
        };
        self.sub.push(self.s_total);
        if steps >= remaining {
            self.values.extend_from_slice(&d.values[..=remaining]);
            self.owner.extend(std::iter::repeat_n(k, remaining + 1));
            rec.sigma = remaining as f64 * self.dt;
            rec.open = !(d.hit && steps == remaining);
            self.done = true;
        } else if d.hit {
            self.values.extend_from_slice(&d.values[..steps]);
            self.owner.extend(std::iter::repeat_n(k, steps));
        } else {
            self.values.extend_from_slice(&d.values);
            self.owner.extend(std::iter::repeat_n(k, steps + 1));
            rec.censored = true;
            self.censored = true;
            self.end = i + steps;
            self.done = true;
        }
        self.atoms.push(rec);
    }

    fn finish(self, mix: &MixtureSpec) -> SkewPath {
        let phi = self.owner.iter().map(|&k| self.atoms[k].s).collect();
        let s_at_phi = self.owner.iter().map(|&k| self.sub[k]).collect();
        SkewPath {
            dt: self.dt,
            horizon: self.end as f64 * self.dt,
            times: (0..self.values.len()).map(|j| j as f64 * self.dt).collect(),
            values: self.values,
            phi,
            s_at_phi,
            atoms: self.atoms,
            sub_values: self.sub,
            p: mix.p,
            delta: mix.delta,
            eps: self.eps,
            censored: self.censored,
        }
    }
}

/// Glues excursions in local-time order until τ passes `horizon`.
pub fn synthesize(
    theta: &ThetaMeasure,
    mix: &MixtureSpec,
    horizon: f64,
    law: &StableLaw,
    dt: f64,
    rule: &HittingRule,
    seeds: SeedTree,
) -> Result<SkewPath> {
    Ok(synthesize_nested(theta, &[theta.eps], mix, horizon, law, dt, rule, seeds)?
        .pop()
        .expect("one level"))
}

/// Syntheses at truncation levels `eps_levels` (each ≥ theta.eps) coupled
/// through one atom stream drawn at theta.eps: a coarser level keeps the
/// same atoms minus the jump atoms with |x| ≤ its ε.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_nested(
    theta: &ThetaMeasure,
    eps_levels: &[f64],
    mix: &MixtureSpec,
    horizon: f64,
    law: &StableLaw,
    dt: f64,
    rule: &HittingRule,
    seeds: SeedTree,
) -> Result<Vec<SkewPath>> {
    mix.validate()?;
    rule.validate()?;
    if !(theta.eps > rule.h) {
        return Err(domain(
            "eps",
            format!("truncation {} must exceed the absorption half-width {}", theta.eps, rule.h),
        ));
    }
    if let Some(&e) = eps_levels.iter().find(|&&e| !(e >= theta.eps)) {
        return Err(domain("eps_levels", format!("{e} is below the sampled truncation {}", theta.eps)));
    }
    if mix.q_eps > 0.0 && !(mix.delta > rule.h) {
        return Err(domain("delta", "must exceed the absorption half-width"));
    }
    if !(horizon > 0.0) {
        return Err(domain("horizon", "must be positive"));
    }
    let rate = mix.p * theta.mass() + mix.q_eps;
    if !(rate > 0.0) {
        return Err(domain("p/q_eps", "no atoms: both intensities vanish"));
    }
    let n_grid = (horizon / dt).round() as usize;
    let mut source = AtomSource {
        theta,
        mix,
        rate,
        walk: Walk::uniform(
            law,
            dt,
            HittingRule {
                h: rule.h,
                t_cap: rule.t_cap.min(n_grid as f64 * dt),
            },
        ),
        seeds: seeds.child("atom"),
        next: 0,
        batch: 4,
        s: 0.0,
    };
    let mut gluers: Vec<Gluer> = eps_levels.iter().map(|&e| Gluer::new(e, n_grid, dt)).collect();
    while gluers.iter().any(|g| !g.done) {
        for d in source.next_batch() {
            for g in &mut gluers {
                g.push(&d);
            }
        }
    }
    Ok(gluers.into_iter().map(|g| g.finish(mix)).collect())
}

/// φ on the grid of `path`.
pub fn local_time(path: &SkewPath) -> &[f64] {
    &path.phi
}

/// Fraction of grid times with |X| ≤ h_probe.
pub fn zero_sojourn_fraction(path: &SkewPath, h_probe: f64) -> f64 {
    let n = path.values.len();
    path.values.iter().filter(|x| x.abs() <= h_probe).count() as f64 / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisBudget {
    pub paths: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionResolvent {
    /// ⟨θ^{(ε)}, V_λf⟩/⟨θ^{(ε)}, V_λ1⟩: exact for the truncated synthesis.
    pub formula: ResolventEstimate,
    /// ⟨θ, V_λf⟩/⟨θ, V_λ1⟩ without truncation.
    pub untruncated: ResolventEstimate,
    /// λ∫e^{−λt}f(X_t)dt averaged over synthesized paths started at 0.
    pub trajectory: ResolventEstimate,
}

/// λR_λf(0) for the pure-jump synthesis, from the excursion formula and
/// from trajectories.
pub fn resolvent_at_zero_from_excursions(
    f: &BoundedTestFunction,
    lambda: f64,
    theta: &ThetaMeasure,
    law: &StableLaw,
    budget: &SynthesisBudget,
    q: &QuadratureSpec,
    seeds: SeedTree,
) -> Result<ExcursionResolvent> {
    let (formula, untruncated) = if f.is_constant_one() {
        (
            ResolventEstimate::exact(1.0, lambda, "identity for f = 1"),
            ResolventEstimate::exact(1.0, lambda, "identity for f = 1"),
        )
    } else {
        let num = pairing_quadrature(f, lambda, law, &theta.eta, Some(theta.eps), q)?;
        let one = BoundedTestFunction::one();
        let den = pairing_quadrature(&one, lambda, law, &theta.eta, Some(theta.eps), q)?;
        (
            ResolventEstimate::exact(num / den, lambda, format!("truncated pairing eps={}", theta.eps)),
            limit_resolvent_at_zero(f, lambda, law, &theta.eta, q)?,
        )
    };
    let horizon = 40.0 / lambda;
    let rule = HittingRule::corrected(law, budget.dt, lambda);
    let mix = MixtureSpec::pure_jump(theta);
    let runs = map_streams(seeds, budget.paths, |i, _| -> Result<(f64, bool)> {
        let path = synthesize(theta, &mix, horizon, law, budget.dt, &rule, seeds.at(i as u64))?;
        let g: Vec<f64> = path
            .times
            .iter()
            .zip(&path.values)
            .map(|(t, x)| (-lambda * t).exp() * f.eval(*x))
            .collect();
        let integral: f64 = g.windows(2).map(|w| 0.5 * budget.dt * (w[0] + w[1])).sum();
        Ok((lambda * integral, path.censored))
    });
    let mut m = Moments::new();
    let mut cens = 0;
    for r in runs {
        let (v, c) = r?;
        m.push(v);
        cens += c as usize;
    }
    Ok(ExcursionResolvent {
        formula,
        untruncated,
        trajectory: ResolventEstimate {
            value: m.mean(),
            stderr: m.stderr(),
            n_paths: budget.paths,
            lambda,
            meta: format!("synthesized trajectories eps={} dt={} censored={cens}", theta.eps, budget.dt),
        },
    })
}
