//! Discrete multi-marginal transport: exact LP and entropic solvers, dual
//! potentials, relative entropy, and the monotonicity, transport-entropy and
//! reverse-certificate checks on finite supports.

mod checks;
mod entropic;
mod folded;
mod simplex;

pub use checks::{
    even_maximizer, monotonicity_check, monotonicity_check_tuple, reverse_certificate, transport_entropy_check,
    CertificateReport, ChallengerOutcome, DiscreteInstance, EntropyTrial, MaximizerSearch, MonotonicityReport,
    TransportEntropyReport,
};
pub use entropic::{solve_entropic, EntropicReport};
pub use folded::{folded_transport, maximize_by_transport, FoldedTransport, MaximizeTrace};

use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::{par, Error, Result};

/// Probability weights on a finite set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::InvalidInput(format!("support point {p:?} repeated")));
            }
        }
        Ok(Self { points, weights })
    }

    /// Normalizes nonnegative masses to a probability vector.
    pub fn from_masses(points: Vec<Vec<f64>>, masses: &[f64]) -> Result<Self> {
        let s: f64 = masses.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidInput("masses must have positive finite total".into()));
        }
        Self::new(points, masses.iter().map(|m| m / s).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Cost values on the product of N finite supports, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostTensor {
    sizes: Vec<usize>,
    values: Vec<f64>,
}

/// Largest dense tensor the exact solver accepts.
pub const MAX_CELLS: usize = 1_000_000;

impl CostTensor {
    pub fn new(sizes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let len: usize = sizes.iter().product();
        if sizes.len() < 2 || len != values.len() {
            return Err(Error::DimensionMismatch { expected: len, got: values.len() });
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::InvalidInput("cost values must be finite or -inf".into()));
        }
        Ok(Self { sizes, values })
    }

    /// Evaluates `cost` on every combination of support points.
    pub fn from_cost(cost: &CostSpec, supports: &[Vec<Vec<f64>>]) -> Result<Self> {
        if supports.len() != cost.marginals() {
            return Err(Error::DimensionMismatch { expected: cost.marginals(), got: supports.len() });
        }
        let sizes: Vec<usize> = supports.iter().map(|s| s.len()).collect();
        let len: usize = sizes.iter().product();
        if len > MAX_CELLS {
            return Err(Error::Intractable(format!("{len} cells exceeds the dense limit {MAX_CELLS}")));
        }
        let n = cost.dim();
        let probe = Self { sizes: sizes.clone(), values: Vec::new() };
        let values = par::map_range(len, |f| {
            let idx = probe.unflatten(f);
            let x: Vec<f64> = idx.iter().enumerate().flat_map(|(i, &k)| supports[i][k].iter().copied()).collect();
            debug_assert_eq!(x.len(), n * supports.len());
            cost.eval(&x)
        });
        Self::new(sizes, values)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unflatten(&self, mut f: usize) -> Vec<usize> {
        let mut idx = vec![0; self.sizes.len()];
        for d in (0..self.sizes.len()).rev() {
            idx[d] = f % self.sizes[d];
            f /= self.sizes[d];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.sizes).fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn negated(&self) -> Self {
        Self { sizes: self.sizes.clone(), values: self.values.iter().map(|v| -v).collect() }
    }
}

/// Sparse N-way coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub sizes: Vec<usize>,
    pub atoms: Vec<(Vec<usize>, f64)>,
}

impl Coupling {
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.sizes[i]];
        for (idx, w) in &self.atoms {
            m[idx[i]] += w;
        }
        m
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Largest L1 marginal error.
    pub fn marginal_error(&self, marginals: &[Vec<f64>]) -> f64 {
        (0..self.sizes.len())
            .map(|i| self.marginal(i).iter().zip(&marginals[i]).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn value(&self, c: &CostTensor) -> f64 {
        self.atoms.iter().map(|(idx, w)| w * c.values[c.flatten(idx)]).sum()
    }

    /// Dense weight array in the cost tensor's layout.
    pub fn dense(&self) -> Vec<f64> {
        let probe = CostTensor { sizes: self.sizes.clone(), values: Vec::new() };
        let mut out = vec![0.0; self.sizes.iter().product()];
        for (idx, w) in &self.atoms {
            out[probe.flatten(idx)] += w;
        }
        out
    }
}

/// Dual potentials with primal/dual values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potentials {
    pub f: Vec<Vec<f64>>,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Potentials {
    pub fn sum_at(&self, idx: &[usize]) -> f64 {
        idx.iter().enumerate().map(|(i, &k)| self.f[i][k]).sum()
    }

    /// `max (c - sum f)` over all finite cells; at most ~0 for a feasible dual
    /// of the maximization problem.
    pub fn max_violation(&self, c: &CostTensor) -> f64 {
        let viol = par::map_range(c.len(), |f| {
            let v = c.values[f];
            if v == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                v - self.sum_at(&c.unflatten(f))
            }
        });
        viol.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|sum f - c|` on the coupling support.
    pub fn slackness_residual(&self, c: &CostTensor, pi: &Coupling) -> f64 {
        pi.atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|(idx, _)| (self.sum_at(idx) - c.values[c.flatten(idx)]).abs())
            .fold(0.0, f64::max)
    }
}

fn check_marginals(c: &CostTensor, marginals: &[Vec<f64>]) -> Result<()> {
    if marginals.len() != c.sizes.len() {
        return Err(Error::DimensionMismatch { expected: c.sizes.len(), got: marginals.len() });
    }
    for (i, (m, s)) in marginals.iter().zip(&c.sizes).enumerate() {
        if m.len() != *s {
            return Err(Error::DimensionMismatch { expected: *s, got: m.len() });
        }
        let t: f64 = m.iter().sum();
        if m.iter().any(|w| !(*w >= 0.0)) || (t - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("marginal {i} is not a probability vector (sum {t})")));
        }
    }
    Ok(())
}

/// Exact maximization `K_max = max_pi int c dpi` by the simplex method.
///
/// Cells with cost `-inf` are excluded. Duals come from the optimal basis and
/// are shifted so that `f_2, ..., f_N` have minimum 0.
pub fn solve_max_exact(c: &CostTensor, marginals: &[Vec<f64>]) -> Result<(Coupling, Potentials)> {
    check_marginals(c, marginals)?;
    let nn = c.sizes.len();
    // row layout: all of slot 0, then slots 1.. without their last point
    let mut offsets = vec![0usize; nn];
    let mut m = c.sizes[0];
    for (off, size) in offsets.iter_mut().zip(&c.sizes).skip(1) {
        *off = m;
        m += size - 1;
    }
    let mut rhs = vec![0.0; m];
    rhs[..c.sizes[0]].copy_from_slice(&marginals[0]);
    for i in 1..nn {
        for k in 0..c.sizes[i] - 1 {
            rhs[offsets[i] + k] = marginals[i][k];
        }
    }
    let mut cells = Vec::new();
    let mut cols = Vec::new();
    let mut obj = Vec::new();
    for f in 0..c.len() {
        let v = c.values[f];
        if v == f64::NEG_INFINITY {
            continue;
        }
        let idx = c.unflatten(f);
        let mut rows = vec![idx[0]];
        for i in 1..nn {
            if idx[i] + 1 < c.sizes[i] {
                rows.push(offsets[i] + idx[i]);
            }
        }
        cells.push(f);
        cols.push(rows);
        obj.push(v);
    }
    let sol = simplex::simplex_max(&cols, &obj, &rhs)?;
    let mut f: Vec<Vec<f64>> = c.sizes.iter().map(|s| vec![0.0; *s]).collect();
    f[0].copy_from_slice(&sol.duals[..c.sizes[0]]);
    for i in 1..nn {
        let s = c.sizes[i] - 1;
        f[i][..s].copy_from_slice(&sol.duals[offsets[i]..offsets[i] + s]);
    }
    for i in 1..nn {
        let lo = f[i].iter().copied().fold(f64::INFINITY, f64::min);
        for v in f[i].iter_mut() {
            *v -= lo;
        }
        for v in f[0].iter_mut() {
            *v += lo;
        }
    }
    let dual: f64 = f.iter().zip(marginals).map(|(fi, mi)| fi.iter().zip(mi).map(|(a, b)| a * b).sum::<f64>()).sum();
    let coupling = Coupling { sizes: c.sizes.clone(), atoms: sol.x.iter().map(|(j, v)| (c.unflatten(cells[*j]), *v)).collect() };
    let primal = coupling.value(c);
    debug_assert!((primal - sol.objective).abs() <= 1e-9 * (1.0 + primal.abs()));
    Ok((coupling, Potentials { f, primal, dual, gap: dual - primal }))
}

/// Exact minimization `K_min = min_pi int c dpi`. Potentials satisfy
/// `sum f_i <= c` with `sum int f_i dmu_i = K_min`.
pub fn solve_min_exact(c: &CostTensor, marginals: &[Vec<f64>]) -> Result<(Coupling, Potentials)> {
    if c.values.contains(&f64::NEG_INFINITY) {
        return Err(Error::InvalidInput("minimization costs must be finite".into()));
    }
    let (pi, p) = solve_max_exact(&c.negated(), marginals)?;
    let f = p.f.iter().map(|fi| fi.iter().map(|v| -v).collect()).collect();
    Ok((pi, Potentials { f, primal: -p.primal, dual: -p.dual, gap: p.gap }))
}

/// `Ent_mu(nu) = sum nu log(nu / mu)`; `+inf` if `nu` charges a `mu`-null point.
pub fn entropy(nu: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<f64> {
    if nu.points != mu.points {
        return Err(Error::InvalidInput("entropy needs a common support".into()));
    }
    Ok(entropy_weights(&nu.weights, &mu.weights))
}

pub fn entropy_weights(nu: &[f64], mu: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in nu.iter().zip(mu) {
        if *a > 0.0 {
            if *b <= 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    s.max(0.0)
}
