use super::BoundedTestFunction;
use crate::rng::{map_streams, SeedTree};
use crate::stable::TailLaw;
use crate::stats::Moments;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// E g(ζ/n) / P(|ζ| > n) by Monte Carlo over ζ with the exact Pareto
/// survival in the denominator.
pub fn reg_variation_ratio(
    g: &BoundedTestFunction,
    tail: &TailLaw,
    n: f64,
    n_samples: usize,
    seeds: SeedTree,
) -> RatioEstimate {
    let p = tail.survival(n);
    const CHUNK: usize = 4096;
    let chunks = n_samples.div_ceil(CHUNK);
    let parts = map_streams(seeds, chunks, |i, rng| {
        let len = CHUNK.min(n_samples - i * CHUNK);
        (0..len)
            .map(|_| g.eval(tail.sample(rng) / n) / p)
            .collect::<Moments>()
    });
    let mut m = Moments::new();
    for part in &parts {
        m.merge(part);
    }
    RatioEstimate {
        value: m.mean(),
        stderr: m.stderr(),
        n_samples,
    }
}

/// Exact value of the same ratio for g = min(|x|^p, 1): at finite `n`, or the
/// n → ∞ limit β(1/(p−β) + 1/β) when `n` is None. The limit carries the
/// factor β from c±β∫g(x)x^{−1−β}dx.
pub fn reg_variation_exact(g: &BoundedTestFunction, tail: &TailLaw, n: Option<f64>) -> Option<f64> {
    let BoundedTestFunction::MinPower { p } = *g else {
        return None;
    };
    let b = tail.beta;
    if p <= b {
        return None;
    }
    let r = n.map_or(0.0, |n| tail.x_min / n);
    if r >= 1.0 {
        return None;
    }
    Some(b * ((1.0 - r.powf(p - b)) / (p - b) + 1.0 / b))
}
