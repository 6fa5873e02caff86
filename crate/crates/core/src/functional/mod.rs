//! The Blaschke–Santaló functional for function and body tuples, exponent
//! bookkeeping, admissibility, stationarity diagnostics and the
//! weighted-product inequality on the positive orthant.

mod exponents;
mod weighted;

pub use exponents::{exponents_from_cost, ConsistencyResiduals, ExponentSystem};
pub use weighted::{weighted_product_inequality_check, OrthantQuadrature, WeightProfile, WeightedProductReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{integrate_exp, CartesianGrid, GridFunction, IntegralReport, ReferenceMeasure};
use crate::transforms::{c_legendre_component, BodyTuple, FunctionTuple};
use crate::{par, Error, Result};

fn measure_for(measures: &[ReferenceMeasure], i: usize) -> Result<&ReferenceMeasure> {
    match measures.len() {
        0 => Err(Error::InvalidInput("no reference measure supplied".into())),
        1 => Ok(&measures[0]),
        _ => measures.get(i).ok_or(Error::DimensionMismatch { expected: i + 1, got: measures.len() }),
    }
}

/// Per-component integrals behind a functional value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BsReport {
    pub value: f64,
    pub log_value: f64,
    pub integrals: Vec<IntegralReport>,
}

/// `prod_i (int exp(-alpha_i V_i) dm_i)^(1/alpha_i)` with per-factor diagnostics.
///
/// `measures` holds one measure per component, or a single shared one.
pub fn bs_value_report(t: &FunctionTuple, measures: &[ReferenceMeasure]) -> Result<BsReport> {
    let mut integrals = Vec::with_capacity(t.len());
    let mut log_value = 0.0;
    for (i, (v, a)) in t.components().iter().zip(t.alpha()).enumerate() {
        let rep = integrate_exp(v, *a, measure_for(measures, i)?)?;
        if !(rep.value.is_finite() && rep.value > 0.0) {
            return Err(Error::DegenerateIntegral { component: i });
        }
        log_value += rep.value.ln() / a;
        integrals.push(rep);
    }
    Ok(BsReport { value: log_value.exp(), log_value, integrals })
}

pub fn bs_value(t: &FunctionTuple, measures: &[ReferenceMeasure]) -> Result<f64> {
    Ok(bs_value_report(t, measures)?.value)
}

/// `prod_i m_i(K_i)^(1/alpha_i)`.
pub fn bs_set_value(bodies: &BodyTuple, alpha: &[f64], measures: &[ReferenceMeasure]) -> Result<f64> {
    if alpha.len() != bodies.len() {
        return Err(Error::DimensionMismatch { expected: bodies.len(), got: alpha.len() });
    }
    let mut log = 0.0;
    for (i, (b, a)) in bodies.bodies().iter().zip(alpha).enumerate() {
        let m = b.measure(measure_for(measures, i)?)?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::DegenerateIntegral { component: i });
        }
        log += m.ln() / a;
    }
    Ok(log.exp())
}

/// Smallest value of `sum V_i(x_i) - c(x)` found and where.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlackReport {
    pub min_slack: f64,
    /// One point per slot.
    pub witness: Vec<Vec<f64>>,
    pub evaluated: usize,
}

/// Sampled admissibility: every aligned point `x_1 = ... = x_N` on the grid
/// plus `samples` random node tuples.
pub fn admissibility_slack(t: &FunctionTuple, samples: usize, seed: u64) -> SlackReport {
    let grid = t.grid();
    let (nn, n) = (t.len(), grid.dim);
    let eval = |nodes: &[usize], x: &mut Vec<f64>| -> f64 {
        let mut s = 0.0;
        for (i, &f) in nodes.iter().enumerate() {
            grid.point(f, &mut x[i * n..(i + 1) * n]);
            s += t.component(i).value(f);
        }
        if s == f64::INFINITY {
            return f64::INFINITY;
        }
        s - t.cost().eval(x)
    };
    let mut best = (f64::INFINITY, vec![0usize; nn]);
    let mut x = vec![0.0; nn * n];
    for f in 0..grid.len() {
        let nodes = vec![f; nn];
        let s = eval(&nodes, &mut x);
        if s < best.0 {
            best = (s, nodes);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let nodes: Vec<usize> = (0..nn).map(|_| rng.gen_range(0..grid.len())).collect();
        let s = eval(&nodes, &mut x);
        if s < best.0 {
            best = (s, nodes);
        }
    }
    SlackReport {
        min_slack: best.0,
        witness: best.1.iter().map(|&f| grid.point_vec(f)).collect(),
        evaluated: grid.len() + samples,
    }
}

/// Admissibility over the whole grid product: `min (V_1 - V_1^c)` where
/// `V_1^c` is the c-transform of the other components.
pub fn exact_admissibility_slack(t: &FunctionTuple) -> Result<SlackReport> {
    let w = c_legendre_component(t, 0)?.function;
    let v = t.component(0);
    let (mut min, mut at) = (f64::INFINITY, 0);
    for f in 0..t.grid().len() {
        let s = v.value(f) - w.value(f);
        if s < min {
            min = s;
            at = f;
        }
    }
    let nodes = complete_witness(t, at);
    Ok(SlackReport { min_slack: min, witness: nodes.iter().map(|&f| t.grid().point_vec(f)).collect(), evaluated: t.grid().len() })
}

/// Partner nodes for slot 0 pinned at `at`: maximize `c - sum_{j>0} V_j`
/// over the other slots. One slot at a time, so exact for two slots and a
/// coordinate-ascent point otherwise.
fn complete_witness(t: &FunctionTuple, at: usize) -> Vec<usize> {
    let grid = t.grid();
    let (nn, n) = (t.len(), grid.dim);
    let mut nodes: Vec<usize> = (0..nn)
        .map(|j| {
            let v = t.component(j).values();
            (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
        })
        .collect();
    nodes[0] = at;
    let mut x = vec![0.0; nn * n];
    for (j, &f) in nodes.iter().enumerate() {
        grid.point(f, &mut x[j * n..(j + 1) * n]);
    }
    let sweeps = if nn == 2 { 1 } else { 4 };
    for _ in 0..sweeps {
        for j in 1..nn {
            let mut best = (f64::NEG_INFINITY, nodes[j]);
            for f in 0..grid.len() {
                let v = t.component(j).value(f);
                if v == f64::INFINITY {
                    continue;
                }
                grid.point(f, &mut x[j * n..(j + 1) * n]);
                let gain = t.cost().eval(&x) - v;
                if gain > best.0 {
                    best = (gain, f);
                }
            }
            nodes[j] = best.1;
            grid.point(best.1, &mut x[j * n..(j + 1) * n]);
        }
    }
    nodes
}

/// First- and second-order diagnostics at a candidate maximizer.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StationarityReport {
    /// `sum_i int Phi_i dmu_i`.
    pub potential_sum: f64,
    /// `sum_i (n + r_i) / (p alpha_i)`.
    pub target: f64,
    pub first_order_residual: f64,
    /// `Var_{mu_i}(Phi_i)`.
    pub variances: Vec<f64>,
    /// `sum_i alpha_i Var_{mu_i}(Phi_i)`.
    pub weighted_variance: f64,
    /// Fitted degree of `Phi_i - Phi_i(0)` along rays.
    pub homogeneity: Vec<f64>,
    pub coupling_cost: Option<f64>,
    pub coupling_variance: Option<f64>,
    /// `A sum alpha_i Var(Phi_i) - Var_gamma(c)`, nonnegative at a maximizer.
    pub second_order_slack: Option<f64>,
    /// Largest `|alpha_i (Phi_i - mean_i) - alpha_j (Phi_j - mean_j)|` on the coupling support.
    pub equality_residual: Option<f64>,
}

/// Atoms of a coupling: one point per slot and a weight.
pub type CouplingAtoms = [(Vec<Vec<f64>>, f64)];

/// Mean and variance of `V` under `exp(-alpha V) m / Z`, by the grid quadrature.
pub fn moments(v: &GridFunction, alpha: f64, m: &ReferenceMeasure) -> Result<(f64, f64)> {
    let grid = v.grid();
    let vmin = v.values().iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    if !vmin.is_finite() {
        return Err(Error::EmptyDomain);
    }
    let parts: Vec<[f64; 3]> = par::map_range(grid.len(), |f| {
        let val = v.value(f);
        if !val.is_finite() {
            return [0.0; 3];
        }
        let w = grid.weight(f) * m.density(&grid.point_vec(f)) * (-alpha * (val - vmin)).exp();
        [w, w * val, w * val * val]
    });
    let s = parts.iter().fold([0.0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    if !(s[0] > 0.0) {
        return Err(Error::DegenerateIntegral { component: 0 });
    }
    let mean = s[1] / s[0];
    Ok((mean, (s[2] / s[0] - mean * mean).max(0.0)))
}

/// Degree of `V - V(0)` along rays: least-squares slope of `log` against
/// `log t` at 9 scales `t in [r0/4, 4 r0]`, averaged over rays. Nodes closer
/// than two spacings to the origin are skipped.
pub fn fit_homogeneity(v: &GridFunction, r0: f64) -> f64 {
    let grid = v.grid();
    let h = grid.spacing();
    let v0 = v.value(grid.origin());
    let dirs: Vec<Vec<f64>> = if grid.dim == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        (0..16)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect()
    };
    let mut slopes = Vec::new();
    for d in &dirs {
        let mut pts = Vec::new();
        for s in 0..9 {
            let t = r0 * 4f64.powf((s as f64 - 4.0) / 4.0);
            if t < 2.0 * h {
                continue;
            }
            let x: Vec<f64> = d.iter().map(|c| c * t).collect();
            let u = v.interpolate(&x) - v0;
            if u.is_finite() && u > 0.0 {
                pts.push((t.ln(), u.ln()));
            }
        }
        if pts.len() >= 3 {
            let m = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            let (mx, my) = (sx / m, sy / m);
            let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
            slopes.push(num / den);
        }
    }
    if slopes.is_empty() {
        f64::NAN
    } else {
        slopes.iter().sum::<f64>() / slopes.len() as f64
    }
}

/// Scale used by [`stationarity_check`] for the homogeneity fit.
pub const HOMOGENEITY_SCALE: f64 = 1.0;

/// First-order identity, variance terms and homogeneity fits for a candidate
/// maximizer. The coupling terms are filled only when `coupling` is given.
pub fn stationarity_check(
    t: &FunctionTuple,
    exp: &ExponentSystem,
    measures: &[ReferenceMeasure],
    coupling: Option<&CouplingAtoms>,
) -> Result<StationarityReport> {
    if exp.marginals() != t.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: exp.marginals() });
    }
    let alpha = t.alpha().to_vec();
    let mut means = Vec::new();
    let mut variances = Vec::new();
    for (i, v) in t.components().iter().enumerate() {
        let (m, var) = moments(v, alpha[i], measure_for(measures, i)?)?;
        means.push(m);
        variances.push(var);
    }
    let potential_sum: f64 = means.iter().sum();
    let n = exp.n as f64;
    let p = exp.joint_f64();
    let target: f64 = exp.r_f64().iter().zip(&alpha).map(|(r, a)| (n + r) / (p * a)).sum();
    let weighted_variance: f64 = alpha.iter().zip(&variances).map(|(a, v)| a * v).sum();
    let homogeneity = t.components().iter().map(|v| fit_homogeneity(v, HOMOGENEITY_SCALE)).collect();
    let mut rep = StationarityReport {
        potential_sum,
        target,
        first_order_residual: potential_sum - target,
        variances,
        weighted_variance,
        homogeneity,
        ..Default::default()
    };
    if let Some(atoms) = coupling {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("coupling has no mass".into()));
        }
        let n = t.grid().dim;
        let costs: Vec<f64> = atoms
            .iter()
            .map(|(pts, _)| {
                let flat: Vec<f64> = pts.iter().flatten().copied().collect();
                debug_assert_eq!(flat.len(), n * t.len());
                t.cost().eval(&flat)
            })
            .collect();
        let mean_c = atoms.iter().zip(&costs).map(|(a, c)| a.1 * c).sum::<f64>() / total;
        let var_c = atoms.iter().zip(&costs).map(|(a, c)| a.1 * (c - mean_c).powi(2)).sum::<f64>() / total;
        let mut eq: f64 = 0.0;
        for (pts, w) in atoms {
            if *w <= 1e-12 * total {
                continue;
            }
            let dev: Vec<f64> = (0..t.len())
                .map(|i| alpha[i] * (t.component(i).interpolate(&pts[i]) - means[i]))
                .collect();
            for a in &dev {
                for b in &dev {
                    eq = eq.max((a - b).abs());
                }
            }
        }
        rep.coupling_cost = Some(mean_c);
        rep.coupling_variance = Some(var_c);
        rep.second_order_slack = Some(exp.a_f64() * weighted_variance - var_c);
        rep.equality_residual = Some(eq);
    }
    Ok(rep)
}

/// Potentials `V_i(t^(1 - p/beta_i) x)` used in the scaling-covariance check.
pub fn rescaled_tuple(t: &FunctionTuple, exp: &ExponentSystem, s: f64) -> Result<FunctionTuple> {
    let p = exp.joint_f64();
    let beta = exp.beta_f64();
    let grid: &CartesianGrid = t.grid();
    let comps = t
        .components()
        .iter()
        .zip(&beta)
        .map(|(v, b)| {
            let k = s.powf(1.0 - p / b);
            GridFunction::from_fn(grid, |x| {
                let y: Vec<f64> = x.iter().map(|c| c * k).collect();
                v.interpolate(&y)
            })
        })
        .collect();
    FunctionTuple::new(comps, t.cost().clone(), t.alpha().to_vec())
}
