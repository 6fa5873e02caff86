use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::ReferenceMeasure;
use crate::{par, Error, Result};

/// A nonincreasing profile `u -> rho(u) >= 0`.
#[derive(Clone)]
pub struct WeightProfile {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for WeightProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightProfile({})", self.name)
    }
}

impl WeightProfile {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, f: F) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    /// `rho(u) = exp(-u)`.
    pub fn exp_neg() -> Self {
        Self::new("exp-neg", |u| (-u).exp())
    }

    /// Indicator of `[0, level]` (and of all negative `u`).
    pub fn indicator(level: f64) -> Self {
        Self::new("indicator", move |u| if u <= level { 1.0 } else { 0.0 })
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Largest increase `rho(b) - rho(a)` over sampled `a < b` in `[0, umax]`.
    pub fn monotonicity_violation(&self, umax: f64) -> f64 {
        let us: Vec<f64> = (0..=400).map(|k| umax * k as f64 / 400.0).collect();
        us.windows(2).map(|w| self.eval(w[1]) - self.eval(w[0])).fold(0.0, f64::max)
    }
}

/// Tensor trapezoid rule on `[0, L]^n`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OrthantQuadrature {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl OrthantQuadrature {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) || points < 3 || !(half_width > 0.0) {
            return Err(Error::InvalidInput("orthant quadrature needs n in 1..=2, >=3 points, L > 0".into()));
        }
        Ok(Self { dim, half_width, points })
    }

    fn nodes(&self) -> Vec<(Vec<f64>, f64)> {
        let h = self.half_width / (self.points - 1) as f64;
        let w1 = |k: usize| if k == 0 || k + 1 == self.points { 0.5 * h } else { h };
        let total = self.points.pow(self.dim as u32);
        (0..total)
            .map(|mut f| {
                let mut x = vec![0.0; self.dim];
                let mut w = 1.0;
                for d in (0..self.dim).rev() {
                    let k = f % self.points;
                    f /= self.points;
                    x[d] = k as f64 * h;
                    w *= w1(k);
                }
                (x, w)
            })
            .collect()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64 + Sync>(&self, f: F, m: &ReferenceMeasure) -> f64 {
        let nodes = self.nodes();
        par::map_slice(&nodes, |(x, w)| w * f(x) * m.density(x)).into_iter().sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedProductReport {
    /// `prod_i (int f_i dm)^(1/alpha_i)`.
    pub lhs: f64,
    /// `(int rho(sum_j t_j^A)^(1/A) dm)^A`.
    pub rhs: f64,
    /// Largest `prod f_i(x_i)^(1/alpha_i) - rho(c(x))` over the sampled points.
    pub constraint_worst: f64,
    /// Largest midpoint-convexity defect of `t -> W(e^t)` with `m = exp(-W)`.
    pub hypothesis_violation: f64,
    pub pass: bool,
}

type Fun<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Checks `prod (int f_i dm)^(1/alpha_i) <= (int rho^(1/A)(sum_j t_j^A) dm)^A`
/// on the positive orthant, after re-verifying the constraint
/// `prod f_i(x_i)^(1/alpha_i) <= rho(sum_j prod_i x_ij^(1/alpha_i))` and the
/// exponential-convexity hypothesis on `m` by sampling.
pub fn weighted_product_inequality_check(
    fs: &[Fun<'_>],
    rho: &WeightProfile,
    alpha: &[f64],
    m: &ReferenceMeasure,
    quad: &OrthantQuadrature,
    samples: usize,
    seed: u64,
) -> Result<WeightedProductReport> {
    let nn = fs.len();
    if alpha.len() != nn || nn < 2 {
        return Err(Error::DimensionMismatch { expected: nn, got: alpha.len() });
    }
    if m.dim() != quad.dim {
        return Err(Error::DimensionMismatch { expected: quad.dim, got: m.dim() });
    }
    if !m.is_unconditional() || !m.is_log_concave() {
        return Err(Error::Hypothesis("reference measure must be unconditional and log-concave".into()));
    }
    let n = quad.dim;
    let a_sum: f64 = alpha.iter().map(|a| 1.0 / a).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // W(e^t) convexity, W = -log density
    let w_of = |t: &[f64]| -> f64 {
        let x: Vec<f64> = t.iter().map(|v| v.exp()).collect();
        -m.density(&x).ln()
    };
    let lo = -4.0;
    let hi = quad.half_width.ln();
    let mut hyp: f64 = 0.0;
    for _ in 0..samples {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let d = w_of(&mid) - 0.5 * (w_of(&a) + w_of(&b));
        let scale = 1.0 + w_of(&a).abs().max(w_of(&b).abs());
        hyp = hyp.max(d / scale);
    }
    if hyp > 1e-9 {
        return Err(Error::Hypothesis(format!("t -> W(e^t) is not convex (defect {hyp:.3e})")));
    }

    let mut worst = f64::NEG_INFINITY;
    let mut x = vec![vec![0.0; n]; nn];
    for s in 0..samples {
        // alternate uniform points with points along a common ray, where the
        // constraint is typically tight
        let base: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..quad.half_width)).collect();
        for xi in x.iter_mut() {
            for (d, v) in xi.iter_mut().enumerate() {
                *v = if s % 2 == 0 { rng.gen_range(0.0..quad.half_width) } else { base[d] * rng.gen_range(0.5..1.5) };
            }
        }
        let c: f64 = (0..n).map(|j| (0..nn).map(|i| x[i][j].powf(1.0 / alpha[i])).product::<f64>()).sum();
        let lhs: f64 = (0..nn).map(|i| fs[i](&x[i]).powf(1.0 / alpha[i])).product();
        worst = worst.max(lhs - rho.eval(c));
    }
    if worst > 1e-9 {
        return Err(Error::Hypothesis(format!("constraint prod f_i^(1/alpha_i) <= rho(c) violated by {worst:.3e}")));
    }

    let lhs: f64 = fs.iter().zip(alpha).map(|(f, a)| quad.integrate(|x| f(x), m).powf(1.0 / a)).product();
    let rhs = quad
        .integrate(|t| rho.eval(t.iter().map(|v| v.powf(a_sum)).sum::<f64>()).powf(1.0 / a_sum), m)
        .powf(a_sum);
    Ok(WeightedProductReport {
        lhs,
        rhs,
        constraint_worst: worst,
        hypothesis_violation: hyp,
        pass: lhs <= rhs * (1.0 + 1e-6) + 1e-12,
    })
}
