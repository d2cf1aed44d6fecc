use super::kernel::hitting_complement;
use super::resolvent::v_lambda_quadrature;
use super::BoundedTestFunction;
use crate::error::Result;
use crate::quad::QuadratureSpec;
use crate::stable::StableLaw;

/// Natural cubic spline on a uniform grid.
#[derive(Clone, Debug)]
struct Spline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(x0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the second derivatives
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let rhs = 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
                let denom = 4.0 - c[i - 1];
                c[i] = 1.0 / denom;
                d[i] = (rhs - d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x0, h, y, m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let u = 1.0 - t;
        let h2 = self.h * self.h / 6.0;
        u * self.y[i]
            + t * self.y[i + 1]
            + h2 * ((u * u * u - u) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }
}

/// V_λf(x) for a fixed (f, λ, α), interpolated in log|x| from quadrature
/// values of V_λf(x)/|x|^{α−1} on [`LO`, `HI`]. Below the window the ratio is
/// frozen at its edge value; above it V_λf itself is, the hitting correction
/// being negligible by then.
#[derive(Clone, Debug)]
pub struct VTable {
    f: BoundedTestFunction,
    lambda: f64,
    law: StableLaw,
    neg: Spline,
    pos: Spline,
}

const LO: f64 = 1e-9;
const HI: f64 = 1e8;
const PER_DECADE: usize = 60;

impl VTable {
    pub fn new(f: &BoundedTestFunction, lambda: f64, law: &StableLaw, q: &QuadratureSpec) -> Result<Self> {
        let a = law.alpha();
        let (u0, u1) = (LO.ln(), HI.ln());
        let n = ((HI / LO).log10() as usize) * PER_DECADE + 1;
        let h = (u1 - u0) / (n - 1) as f64;
        let one = f.is_constant_one();
        let node = |x: f64| -> Result<f64> {
            let v = if one {
                hitting_complement(x, lambda, law, q)? / lambda
            } else {
                v_lambda_quadrature(f, x, lambda, law, q)?
            };
            Ok(v / x.abs().powf(a - 1.0))
        };
        let symmetric = matches!(
            f,
            BoundedTestFunction::Constant { .. } | BoundedTestFunction::GaussianBump
        );
        let mut pos = Vec::with_capacity(n);
        let mut neg = Vec::with_capacity(n);
        for i in 0..n {
            let x = (u0 + i as f64 * h).exp();
            let p = node(x)?;
            pos.push(p);
            neg.push(if symmetric { p } else { node(-x)? });
        }
        Ok(Self {
            f: *f,
            lambda,
            law: *law,
            neg: Spline::new(u0, h, neg),
            pos: Spline::new(u0, h, pos),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax == 0.0 {
            return 0.0;
        }
        let ax = ax.min(HI);
        let s = if x < 0.0 { &self.neg } else { &self.pos };
        s.eval(ax.ln()) * ax.powf(self.law.alpha() - 1.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn function(&self) -> &BoundedTestFunction {
        &self.f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_cubic_interior() {
        let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).sin()).collect();
        let s = Spline::new(0.0, 0.1, y);
        for x in [1.234, 2.5, 3.71] {
            assert!((s.eval(x) - x.sin()).abs() < 1e-5);
        }
    }
}
