//! Cost families and sampled verification of their structural hypotheses.
//!
//! Points of the product space are passed flat: `x[i*n .. (i+1)*n]` is the
//! i-th argument.

use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type CustomEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The cost families known to the crate.
#[derive(Clone, Debug, PartialEq)]
pub enum CostFamily {
    /// `sum_j prod_i x_{i,j}`.
    Product,
    /// `sum_j prod_i |x_{i,j}|^{1/alpha_i}`.
    WeightedProduct { alpha: Vec<f64> },
    /// `sum_j prod_i |x_{i,j}|^{p_{i,j}}`, exponents indexed `[i][j]`.
    AbsWeightedProduct { exponents: Vec<Vec<f64>> },
    /// `<x_1, x_2>` (N = 2).
    InnerProduct,
    /// `(1/(N-1)) sum_{i<j} <x_i, x_j>`.
    Barycentric,
    /// `log <x_1, x_2>`, `-inf` where the inner product is not positive.
    LogInnerProduct,
    /// User evaluator with declared per-marginal degrees.
    Custom { name: String, degrees: Option<Vec<f64>> },
}

/// A cost function on `(R^n)^N`.
#[derive(Clone)]
pub struct CostSpec {
    marginals: usize,
    dim: usize,
    family: CostFamily,
    custom: Option<CustomEval>,
}

impl fmt::Debug for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostSpec")
            .field("N", &self.marginals)
            .field("n", &self.dim)
            .field("family", &self.family)
            .finish()
    }
}

impl PartialEq for CostSpec {
    fn eq(&self, other: &Self) -> bool {
        self.marginals == other.marginals
            && self.dim == other.dim
            && self.family == other.family
            && self.custom.is_none()
            && other.custom.is_none()
    }
}

/// Per-coordinate multiplicative form `c = sum_j prod_i g_{i,j}(x_{i,j})`.
/// Every factor is either the identity or `|t|^p`.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Identity,
    AbsPow(f64),
}

impl Factor {
    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        match self {
            Factor::Identity => t,
            Factor::AbsPow(p) => {
                if *p == 1.0 {
                    t.abs()
                } else {
                    t.abs().powf(*p)
                }
            }
        }
    }
}

impl CostSpec {
    pub fn new(marginals: usize, dim: usize, family: CostFamily) -> Result<Self> {
        if marginals < 2 {
            return Err(Error::InvalidInput("a cost needs N >= 2 marginals".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        match &family {
            CostFamily::WeightedProduct { alpha } => {
                if alpha.len() != marginals || alpha.iter().any(|a| !(*a > 0.0)) {
                    return Err(Error::InvalidInput("weighted product needs N positive alphas".into()));
                }
            }
            CostFamily::AbsWeightedProduct { exponents } => {
                if exponents.len() != marginals
                    || exponents.iter().any(|row| row.len() != dim || row.iter().any(|p| !(*p > 0.0)))
                {
                    return Err(Error::InvalidInput("absolute weighted product needs an N x n table of positive exponents".into()));
                }
            }
            CostFamily::InnerProduct | CostFamily::LogInnerProduct if marginals != 2 => {
                return Err(Error::InvalidInput("inner-product costs take exactly two arguments".into()));
            }
            CostFamily::Custom { .. } => {
                return Err(Error::InvalidInput("use CostSpec::custom for custom costs".into()));
            }
            _ => {}
        }
        Ok(Self { marginals, dim, family, custom: None })
    }

    pub fn product(marginals: usize, dim: usize) -> Self {
        Self::new(marginals, dim, CostFamily::Product).expect("valid product cost")
    }

    pub fn inner_product(dim: usize) -> Self {
        Self::new(2, dim, CostFamily::InnerProduct).expect("valid inner product")
    }

    /// Custom cost from an evaluator on flat points. Declared degrees are
    /// re-checked by [`detect_multi_homogeneity`] before any use that needs them.
    pub fn custom<F>(marginals: usize, dim: usize, name: &str, degrees: Option<Vec<f64>>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            marginals,
            dim,
            family: CostFamily::Custom { name: name.to_string(), degrees },
            custom: Some(Arc::new(f)),
        }
    }

    pub fn marginals(&self) -> usize {
        self.marginals
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn family(&self) -> &CostFamily {
        &self.family
    }

    pub fn family_name(&self) -> String {
        match &self.family {
            CostFamily::Product => "product".into(),
            CostFamily::WeightedProduct { .. } => "weighted-product".into(),
            CostFamily::AbsWeightedProduct { .. } => "abs-weighted-product".into(),
            CostFamily::InnerProduct => "inner-product".into(),
            CostFamily::Barycentric => "barycentric".into(),
            CostFamily::LogInnerProduct => "log-inner-product".into(),
            CostFamily::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    /// Evaluates the cost at a flat point of `(R^n)^N`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let nn = self.marginals;
        match &self.family {
            CostFamily::Product => (0..n).map(|j| (0..nn).map(|i| x[i * n + j]).product::<f64>()).sum(),
            CostFamily::WeightedProduct { alpha } => (0..n)
                .map(|j| (0..nn).map(|i| x[i * n + j].abs().powf(1.0 / alpha[i])).product::<f64>())
                .sum(),
            CostFamily::AbsWeightedProduct { exponents } => (0..n)
                .map(|j| (0..nn).map(|i| x[i * n + j].abs().powf(exponents[i][j])).product::<f64>())
                .sum(),
            CostFamily::InnerProduct => (0..n).map(|j| x[j] * x[n + j]).sum(),
            CostFamily::LogInnerProduct => {
                let ip: f64 = (0..n).map(|j| x[j] * x[n + j]).sum();
                if ip > 0.0 {
                    ip.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            CostFamily::Barycentric => {
                let mut s = 0.0;
                for a in 0..nn {
                    for b in a + 1..nn {
                        s += (0..n).map(|j| x[a * n + j] * x[b * n + j]).sum::<f64>();
                    }
                }
                s / (nn - 1) as f64
            }
            CostFamily::Custom { .. } => (self.custom.as_ref().expect("custom evaluator"))(x),
        }
    }

    /// Checked evaluation on a tuple of vectors.
    pub fn eval_tuple(&self, x: &[Vec<f64>]) -> Result<f64> {
        if x.len() != self.marginals {
            return Err(Error::DimensionMismatch { expected: self.marginals, got: x.len() });
        }
        let mut flat = Vec::with_capacity(self.marginals * self.dim);
        for v in x {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
            }
            flat.extend_from_slice(v);
        }
        Ok(self.eval(&flat))
    }

    /// Declared per-marginal degrees, when the family has them.
    pub fn degrees(&self) -> Option<Vec<f64>> {
        match &self.family {
            CostFamily::Product | CostFamily::InnerProduct => Some(vec![1.0; self.marginals]),
            CostFamily::WeightedProduct { alpha } => Some(alpha.iter().map(|a| 1.0 / a).collect()),
            CostFamily::AbsWeightedProduct { exponents } => {
                let ok = exponents.iter().all(|row| row.iter().all(|p| (p - row[0]).abs() < 1e-15));
                ok.then(|| exponents.iter().map(|row| row[0]).collect())
            }
            CostFamily::Custom { degrees, .. } => degrees.clone(),
            CostFamily::Barycentric | CostFamily::LogInnerProduct => None,
        }
    }

    /// Declared degrees as rationals (denominators up to 10^6).
    pub fn rational_degrees(&self) -> Option<Vec<Rational64>> {
        self.degrees()?.into_iter().map(to_rational).collect()
    }

    /// Per-coordinate multiplicative form, if the family has one.
    pub fn factors(&self) -> Option<Vec<Vec<Factor>>> {
        let (nn, n) = (self.marginals, self.dim);
        match &self.family {
            CostFamily::Product | CostFamily::InnerProduct => Some(vec![vec![Factor::Identity; n]; nn]),
            CostFamily::WeightedProduct { alpha } => {
                Some(alpha.iter().map(|a| vec![Factor::AbsPow(1.0 / a); n]).collect())
            }
            CostFamily::AbsWeightedProduct { exponents } => {
                Some(exponents.iter().map(|row| row.iter().map(|p| Factor::AbsPow(*p)).collect()).collect())
            }
            _ => None,
        }
    }

    /// True for costs satisfying `c(-x) = c(x)` jointly, so transforms of
    /// even functions are even without symmetrization.
    pub fn is_jointly_even(&self) -> bool {
        match &self.family {
            CostFamily::Product => self.marginals.is_multiple_of(2),
            CostFamily::WeightedProduct { .. }
            | CostFamily::AbsWeightedProduct { .. }
            | CostFamily::InnerProduct
            | CostFamily::Barycentric
            | CostFamily::LogInnerProduct => true,
            CostFamily::Custom { .. } => false,
        }
    }
}

/// Converts a float to a nearby rational with a small denominator.
pub fn to_rational(v: f64) -> Option<Rational64> {
    for den in 1..=1_000_000i64 {
        let num = (v * den as f64).round();
        if (num / den as f64 - v).abs() <= 1e-12 * v.abs().max(1.0) {
            return Some(Rational64::new(num as i64, den));
        }
        if den > 1000 {
            break;
        }
    }
    Rational64::approximate_float(v)
}

/// JSON form of a cost: `{"family": ..., "N": ..., "n": ..., "params": {...}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostJson {
    pub family: String,
    #[serde(rename = "N")]
    pub marginals: usize,
    pub n: usize,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl TryFrom<CostJson> for CostSpec {
    type Error = Error;
    fn try_from(j: CostJson) -> Result<Self> {
        let get_vec = |key: &str| -> Result<Vec<f64>> {
            serde_json::from_value(j.params.get(key).cloned().unwrap_or_default())
                .map_err(|e| Error::InvalidInput(format!("params.{key}: {e}")))
        };
        let family = match j.family.as_str() {
            "product" => CostFamily::Product,
            "weighted-product" => CostFamily::WeightedProduct { alpha: get_vec("alpha")? },
            "abs-weighted-product" => CostFamily::AbsWeightedProduct {
                exponents: serde_json::from_value(j.params.get("exponents").cloned().unwrap_or_default())
                    .map_err(|e| Error::InvalidInput(format!("params.exponents: {e}")))?,
            },
            "inner-product" => CostFamily::InnerProduct,
            "barycentric" => CostFamily::Barycentric,
            "log-inner-product" => CostFamily::LogInnerProduct,
            other => return Err(Error::InvalidInput(format!("unknown cost family `{other}`"))),
        };
        CostSpec::new(j.marginals, j.n, family)
    }
}

impl From<&CostSpec> for CostJson {
    fn from(c: &CostSpec) -> Self {
        let mut params = serde_json::Map::new();
        match &c.family {
            CostFamily::WeightedProduct { alpha } => {
                params.insert("alpha".into(), serde_json::json!(alpha));
            }
            CostFamily::AbsWeightedProduct { exponents } => {
                params.insert("exponents".into(), serde_json::json!(exponents));
            }
            _ => {}
        }
        let family = match &c.family {
            CostFamily::Custom { .. } => "custom".to_string(),
            _ => c.family_name(),
        };
        CostJson { family, marginals: c.marginals, n: c.dim, params }
    }
}

fn sample_point(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn scale_slot(x: &[f64], n: usize, i: usize, t: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    for v in &mut y[i * n..(i + 1) * n] {
        *v *= t;
    }
    y
}

/// Fitted homogeneity degrees of a cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub joint_degree: Option<f64>,
    pub degrees: Option<Vec<f64>>,
    pub max_residual: f64,
}

fn fit_degree<F: Fn(&[f64], f64) -> Vec<f64>>(cost: &CostSpec, pts: &[Vec<f64>], scale: F) -> (f64, f64) {
    let ts = [0.5, 2.0, 3.0];
    let mut est = Vec::new();
    for x in pts {
        let c0 = cost.eval(x);
        if c0.abs() < 1e-3 {
            continue;
        }
        for t in ts {
            let ct = cost.eval(&scale(x, t));
            if ct / c0 > 0.0 {
                est.push((ct / c0).ln() / t.ln());
            }
        }
    }
    if est.is_empty() {
        return (f64::NAN, f64::INFINITY);
    }
    let d = est.iter().sum::<f64>() / est.len() as f64;
    // snap to a nearby simple rational, as the families have rational degrees
    let d = to_rational(d)
        .filter(|r| *r.denom() <= 12)
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .filter(|s| (s - d).abs() < 1e-6)
        .unwrap_or(d);
    let mut res: f64 = 0.0;
    for x in pts {
        let c0 = cost.eval(x);
        for t in ts {
            let ct = cost.eval(&scale(x, t));
            let r = (ct - t.powf(d) * c0).abs() / c0.abs().max(1e-12).max(ct.abs());
            res = res.max(r);
        }
    }
    (d, res)
}

/// Fits per-marginal and joint homogeneity degrees on random points.
pub fn detect_multi_homogeneity(cost: &CostSpec, samples: usize, tol: f64, seed: u64) -> HomogeneityReport {
    let (nn, n) = (cost.marginals, cost.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..samples.max(32)).map(|_| sample_point(&mut rng, nn * n)).collect();
    let (jd, jres) = fit_degree(cost, &pts, |x, t| x.iter().map(|v| v * t).collect());
    let mut degrees = Vec::with_capacity(nn);
    let mut worst: f64 = jres;
    let mut all_ok = true;
    for i in 0..nn {
        let (d, r) = fit_degree(cost, &pts, |x, t| scale_slot(x, n, i, t));
        worst = worst.max(r);
        all_ok &= r < tol && d.is_finite();
        degrees.push(d);
    }
    HomogeneityReport {
        joint_degree: (jres < tol && jd.is_finite()).then_some(jd),
        degrees: all_ok.then_some(degrees),
        max_residual: worst,
    }
}

/// Outcome of the sign-symmetry search for one marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignSymmetryWitness {
    pub marginal: usize,
    /// Sign vector `s` with `s_i = +1`, when one works on every sample.
    pub signs: Option<Vec<i8>>,
    /// Otherwise the sample refuting the last surviving sign vector.
    pub failure_sample: Option<usize>,
    pub failure_point: Option<Vec<f64>>,
}

/// Searches sign vectors `s` (with `s_i = +1`) such that flipping `x_i` equals
/// applying `s` to all arguments. Candidates are enumerated by binary counting
/// over the other slots, starting from all `+1`.
pub fn check_sign_symmetry(cost: &CostSpec, i: usize, samples: usize, seed: u64) -> SignSymmetryWitness {
    let (nn, n) = (cost.marginals, cost.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..samples.max(1)).map(|_| sample_point(&mut rng, nn * n)).collect();
    let others: Vec<usize> = (0..nn).filter(|&k| k != i).collect();
    let mut latest_failure = 0usize;
    for mask in 0..(1usize << others.len()) {
        let mut signs = vec![1i8; nn];
        for (b, &k) in others.iter().enumerate() {
            if mask >> b & 1 == 1 {
                signs[k] = -1;
            }
        }
        let fail = pts.iter().position(|x| {
            let lhs = cost.eval(&scale_slot(x, n, i, -1.0));
            let mut y = x.clone();
            for (k, s) in signs.iter().enumerate() {
                if *s < 0 {
                    y = scale_slot(&y, n, k, -1.0);
                }
            }
            let rhs = cost.eval(&y);
            !((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()) || (lhs == rhs))
        });
        match fail {
            None => return SignSymmetryWitness { marginal: i, signs: Some(signs), failure_sample: None, failure_point: None },
            Some(k) => latest_failure = latest_failure.max(k),
        }
    }
    SignSymmetryWitness {
        marginal: i,
        signs: None,
        failure_sample: Some(latest_failure),
        failure_point: Some(pts[latest_failure].clone()),
    }
}

/// Sampled midpoint convexity in argument `i` with the others frozen.
/// Returns `(pass, worst violation)`; violations below 1e-9 pass.
pub fn check_partial_convexity(cost: &CostSpec, i: usize, samples: usize, seed: u64) -> (bool, f64) {
    let (nn, n) = (cost.marginals, cost.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..samples.max(1) {
        let x = sample_point(&mut rng, nn * n);
        let a = sample_point(&mut rng, n);
        let b = sample_point(&mut rng, n);
        let with = |v: &[f64]| {
            let mut y = x.clone();
            y[i * n..(i + 1) * n].copy_from_slice(v);
            cost.eval(&y)
        };
        let m: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
        worst = worst.max(with(&m) - 0.5 * (with(&a) + with(&b)));
    }
    (worst < 1e-9, worst)
}

/// Sampled check of items (2) and (3) of the `(j, i1, i2)` assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JiiReport {
    pub item2_pass: bool,
    /// Largest `c(mid) - max(c(a), c(b))`.
    pub item2_worst: f64,
    pub item2_witness: Option<Vec<f64>>,
    pub item3_pass: bool,
    pub item3_residual: f64,
}

impl JiiReport {
    pub fn pass(&self) -> bool {
        self.item2_pass && self.item3_pass
    }
}

/// Item (2): `(y_{i1}, t_{i2}) -> c` is quasi-convex with the other slots frozen,
/// where `t` is coordinate `j` and `y` the remaining coordinates. Item (3):
/// flipping `t_{i1}` has the same effect as flipping `t_{i2}`.
pub fn check_jii_assumption(cost: &CostSpec, j: usize, i1: usize, i2: usize, samples: usize, seed: u64) -> JiiReport {
    let (nn, n) = (cost.marginals, cost.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst2: f64 = f64::NEG_INFINITY;
    let mut witness = None;
    let mut res3: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let x = sample_point(&mut rng, nn * n);
        // item (3)
        let mut f1 = x.clone();
        f1[i1 * n + j] = -f1[i1 * n + j];
        let mut f2 = x.clone();
        f2[i2 * n + j] = -f2[i2 * n + j];
        let (c1, c2) = (cost.eval(&f1), cost.eval(&f2));
        res3 = res3.max((c1 - c2).abs() / (1.0 + c1.abs()));
        // item (2): perturb the free variables (y_{i1}, t_{i2})
        let free: Vec<usize> = (0..n).filter(|&k| k != j).map(|k| i1 * n + k).chain([i2 * n + j]).collect();
        let mut a = x.clone();
        let mut b = x.clone();
        for &f in &free {
            a[f] = rng.gen_range(-2.0..2.0);
            b[f] = rng.gen_range(-2.0..2.0);
        }
        let mut m = x.clone();
        for &f in &free {
            m[f] = 0.5 * (a[f] + b[f]);
        }
        let v = cost.eval(&m) - cost.eval(&a).max(cost.eval(&b));
        if v > worst2 {
            worst2 = v;
            if v > 1e-9 {
                witness = Some(m.clone());
            }
        }
    }
    JiiReport {
        item2_pass: worst2 <= 1e-9,
        item2_worst: worst2,
        item2_witness: witness,
        item3_pass: res3 <= 1e-12,
        item3_residual: res3,
    }
}
