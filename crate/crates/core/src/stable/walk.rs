use super::{HittingRule, StableLaw};
use crate::rng::Stream;

/// Monitored stable walk killed on entering the band |x| ≤ h.
///
/// Steps have length clamp(ρ|x|^α, fine_dt, dt) and never straddle a
/// multiple of `dt`, so the coarse grid is always visited. With
/// `fine_dt = dt` it draws exactly the same numbers as `simulate_path`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Walk {
    pub law: StableLaw,
    pub dt: f64,
    pub fine_dt: f64,
    pub rho: f64,
    pub rule: HittingRule,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkOutcome {
    /// Detected hitting time; None when censored at `t_cap`.
    pub sigma: Option<f64>,
    pub t_end: f64,
    pub x_end: f64,
    pub steps: u64,
}

impl Walk {
    pub fn uniform(law: &StableLaw, dt: f64, rule: HittingRule) -> Self {
        Self {
            law: *law,
            dt,
            fine_dt: dt,
            rho: 0.0,
            rule,
        }
    }

    /// Walk resolved near the origin down to `fine_dt`, with the band set by
    /// the continuity-corrected width for that step.
    pub fn refined(law: &StableLaw, dt: f64, fine_dt: f64, rho: f64, lambda: f64) -> Self {
        let fine_dt = fine_dt.min(dt);
        Self {
            law: *law,
            dt,
            fine_dt,
            rho,
            rule: HittingRule::corrected(law, fine_dt, lambda),
        }
    }

    /// Refined walk sized for a start at `x0`: the finest step resolves
    /// the scale |x0| by a factor 10 in space.
    pub fn for_start(law: &StableLaw, dt: f64, x0: f64, lambda: f64) -> Self {
        let a = law.alpha();
        let fine = 1e-3 * x0.abs().min(1.0).powf(a);
        Self::refined(law, dt, fine.min(dt), 1e-2, lambda)
    }

    pub fn is_uniform(&self) -> bool {
        self.fine_dt >= self.dt
    }

    /// Runs from `x0`, calling `visit(t, x)` at the start and after every
    /// step, including the absorbing one.
    pub fn run(&self, x0: f64, rng: &mut Stream, visit: impl FnMut(f64, f64)) -> WalkOutcome {
        self.run_from(x0, true, rng, visit)
    }

    /// As `run`; with `check_start = false` the band is first tested after
    /// one step, for walks restarted by a jump at a touch epoch.
    pub fn run_from(
        &self,
        x0: f64,
        check_start: bool,
        rng: &mut Stream,
        mut visit: impl FnMut(f64, f64),
    ) -> WalkOutcome {
        let h = self.rule.h;
        let cap = self.rule.t_cap;
        visit(0.0, x0);
        if check_start && x0.abs() <= h {
            return WalkOutcome {
                sigma: Some(0.0),
                t_end: 0.0,
                x_end: x0,
                steps: 0,
            };
        }
        let mut x = x0;
        let mut steps = 0u64;
        if self.is_uniform() {
            let s = self.law.scale(self.dt);
            let mut k = 1u64;
            loop {
                let t = k as f64 * self.dt;
                if t > cap {
                    return WalkOutcome {
                        sigma: None,
                        t_end: (k - 1) as f64 * self.dt,
                        x_end: x,
                        steps,
                    };
                }
                x += s * self.law.standard(rng);
                steps += 1;
                visit(t, x);
                if x.abs() <= h {
                    return WalkOutcome {
                        sigma: Some(t),
                        t_end: t,
                        x_end: x,
                        steps,
                    };
                }
                k += 1;
            }
        }
        let a = self.law.alpha();
        let inv_a = 1.0 / a;
        let mut k = 0u64;
        let mut t = 0.0;
        loop {
            let next_base = (k + 1) as f64 * self.dt;
            let want = (self.rho * x.abs().powf(a)).clamp(self.fine_dt, self.dt);
            let (t_new, ds) = if t + want >= next_base * (1.0 - 1e-12) {
                k += 1;
                (next_base, next_base - t)
            } else {
                (t + want, want)
            };
            if t_new > cap {
                return WalkOutcome {
                    sigma: None,
                    t_end: t,
                    x_end: x,
                    steps,
                };
            }
            x += ds.powf(inv_a) * self.law.standard(rng);
            t = t_new;
            steps += 1;
            visit(t, x);
            if x.abs() <= h {
                return WalkOutcome {
                    sigma: Some(t),
                    t_end: t,
                    x_end: x,
                    steps,
                };
            }
        }
    }

    /// Trapezoidal ∫₀^{σ̂∧cap} e^{−λt} f(X_t) dt along one walk.
    pub fn discounted(
        &self,
        x0: f64,
        lambda: f64,
        f: &impl Fn(f64) -> f64,
        rng: &mut Stream,
    ) -> (f64, WalkOutcome) {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        let out = self.run(x0, rng, |t, x| {
            let g = (-lambda * t).exp() * f(x);
            if let Some((t0, g0)) = prev {
                acc += 0.5 * (t - t0) * (g + g0);
            }
            prev = Some((t, g));
        });
        (acc, out)
    }
}
