use std::f64::consts::{FRAC_PI_2, PI};

use super::{adaptive, Estimate, QuadratureSpec};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    fn trig(self, s: f64) -> f64 {
        match self {
            Phase::Cos => s.cos(),
            Phase::Sin => s.sin(),
        }
    }

    fn first_zero(self) -> f64 {
        match self {
            Phase::Cos => FRAC_PI_2,
            Phase::Sin => 0.0,
        }
    }
}

/// ∫_start^∞ g(s)·trig(s) ds for g eventually monotone and decaying.
/// Cells between consecutive zeros of the trig factor are integrated
/// directly; the alternating tail is summed by repeated averaging of the
/// partial sums.
pub fn fourier_tail(
    g: &impl Fn(f64) -> f64,
    start: f64,
    phase: Phase,
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let z0 = phase.first_zero();
    let k0 = ((start - z0) / PI).floor() as i64 + 1;
    let zero = |k: i64| z0 + k as f64 * PI;
    let h = |s: f64| g(s) * phase.trig(s);
    let cell_tol = spec.abs_tol * 1e-2;
    let lead = adaptive(&h, start, zero(k0), cell_tol, spec.rel_tol, spec.max_subdivisions)?;

    let mut direct = spec.direct_cells.max(4);
    loop {
        let depth = spec.accel_depth;
        let total = direct + depth + 1;
        let mut partial = Vec::with_capacity(total + 1);
        let mut acc = lead;
        partial.push(acc.value);
        for j in 0..total as i64 {
            let c = adaptive(
                &h,
                zero(k0 + j),
                zero(k0 + j + 1),
                cell_tol,
                spec.rel_tol,
                spec.max_subdivisions,
            )?;
            acc = acc + c;
            partial.push(acc.value);
        }
        let n = partial.len();
        let a = euler(&partial[n - 1 - depth..]);
        let b = euler(&partial[n - 2 - depth..n - 1]);
        let est = Estimate {
            value: a,
            error: (a - b).abs() + acc.error,
        };
        if est.error <= spec.tol_for(a) || direct > 4000 {
            return Ok(est);
        }
        direct *= 2;
    }
}

fn euler(s: &[f64]) -> f64 {
    let mut v = s.to_vec();
    while v.len() > 1 {
        for i in 0..v.len() - 1 {
            v[i] = 0.5 * (v[i] + v[i + 1]);
        }
        v.pop();
    }
    v[0]
}
