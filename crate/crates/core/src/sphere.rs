//! Homogeneous tuples written through their angular profiles.
//!
//! A homogeneous tuple with `Phi_i(0) = 0` is `Phi_i(t theta) = tau_i t^beta_i
//! phi_i(theta)^beta_i` for positive even profiles `phi_i` on the unit sphere.
//! Admissibility becomes the product constraint `c(theta) <= prod
//! phi_i^p_i(theta_i)` and the functional becomes a constant times
//! `prod_i (int rho_i / phi_i^(n + r_i))^(1 / alpha_i)`. The improvement step
//! solves the transport problem for `log c` and rebuilds profiles from its
//! dual potentials.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::functional::{exact_admissibility_slack, ExponentSystem};
use crate::geometry::{CartesianGrid, DirectionGrid, GridFunction, ReferenceMeasure};
use crate::transforms::FunctionTuple;
use crate::transport::{solve_max_exact, CostTensor, Coupling, Potentials};
use crate::{par, Error, Result};

/// A positive even function on a direction grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub struct SphericalProfile {
    grid: DirectionGrid,
    values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProfileSpec {
    grid: DirectionGrid,
    values: Vec<f64>,
}

impl TryFrom<ProfileSpec> for SphericalProfile {
    type Error = Error;
    fn try_from(s: ProfileSpec) -> Result<Self> {
        SphericalProfile::new(s.grid, s.values)
    }
}

impl From<SphericalProfile> for ProfileSpec {
    fn from(p: SphericalProfile) -> Self {
        ProfileSpec { grid: p.grid, values: p.values }
    }
}

const EVEN_TOL: f64 = 1e-12;

impl SphericalProfile {
    pub fn new(grid: DirectionGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!("profile value {} at direction {k} is not positive", values[k])));
        }
        for k in 0..grid.len() {
            let (a, b) = (values[k], values[grid.neg(k)]);
            if (a - b).abs() > EVEN_TOL * a.max(b) {
                return Err(Error::InvalidInput(format!("profile is not even at direction {k}: {a} vs {b}")));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &DirectionGrid, value: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.len()])
    }

    /// Samples `f` at the directions and averages antipodal pairs.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: &DirectionGrid, f: F) -> Result<Self> {
        let raw: Vec<f64> = (0..grid.len()).map(|k| f(grid.dir(k))).collect();
        let values = (0..grid.len()).map(|k| 0.5 * (raw[k] + raw[grid.neg(k)])).collect();
        Self::new(grid.clone(), values)
    }

    /// `s (1 + sum_j a_j cos(2 j theta) + b_j sin(2 j theta))` with random
    /// coefficients of size at most `amplitude / modes`; only even modes, so
    /// the result is even. Requires `amplitude < 1`.
    pub fn random<R: Rng>(grid: &DirectionGrid, rng: &mut R, modes: usize, amplitude: f64, scale: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) || !(scale > 0.0) {
            return Err(Error::InvalidInput("need 0 <= amplitude < 1 and scale > 0".into()));
        }
        let m = modes.max(1);
        let coef: Vec<(f64, f64)> = (0..m)
            .map(|_| (rng.gen_range(-1.0..1.0) * amplitude / m as f64, rng.gen_range(-1.0..1.0) * amplitude / m as f64))
            .collect();
        if grid.dim() == 1 {
            return Self::constant(grid, scale * (1.0 + coef[0].0));
        }
        Self::from_fn(grid, |u| {
            let th = u[1].atan2(u[0]);
            let s: f64 = coef
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let w = 2.0 * (j + 1) as f64 * th;
                    a * w.cos() + b * w.sin()
                })
                .sum();
            scale * (1.0 + s)
        })
    }

    pub fn grid(&self) -> &DirectionGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * s).collect())
    }

    /// Value in the direction of a nonzero `x`, linear in the angle between
    /// grid directions.
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.grid.dim() == 1 {
            return if x[0] >= 0.0 { self.values[0] } else { self.values[1] };
        }
        let k = self.grid.sector(x[0], x[1]);
        let mut a = x[1].atan2(x[0]);
        if a < 0.0 {
            a += 2.0 * std::f64::consts::PI;
        }
        let t = ((a - self.grid.angle(k)) / self.grid.step()).clamp(0.0, 1.0);
        let k1 = (k + 1) % self.grid.len();
        (1.0 - t) * self.values[k] + t * self.values[k1]
    }

    /// Largest relative gap between antipodal values.
    pub fn asymmetry(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                let (a, b) = (self.values[k], self.values[self.grid.neg(k)]);
                (a - b).abs() / a.max(b)
            })
            .fold(0.0, f64::max)
    }
}

fn check_profiles(profiles: &[SphericalProfile], cost: &CostSpec) -> Result<Vec<f64>> {
    if profiles.len() != cost.marginals() {
        return Err(Error::DimensionMismatch { expected: cost.marginals(), got: profiles.len() });
    }
    let grid = profiles[0].grid();
    if grid.dim() != cost.dim() {
        return Err(Error::DimensionMismatch { expected: cost.dim(), got: grid.dim() });
    }
    if profiles.iter().any(|p| p.grid() != grid) {
        return Err(Error::InvalidInput("profiles must share one direction grid".into()));
    }
    cost.degrees()
        .filter(|d| d.iter().all(|p| *p > 0.0))
        .ok_or_else(|| Error::Hypothesis(format!("cost `{}` is not homogeneous in every slot", cost.family_name())))
}

/// Minimum of `prod phi_i^p_i(theta_i) - c(theta)` over direction tuples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphericalSlack {
    pub min_slack: f64,
    /// Direction index per slot.
    pub witness: Vec<usize>,
    pub evaluated: usize,
    /// Whether every tuple was visited.
    pub exhaustive: bool,
}

/// Exhaustive over all direction tuples when there are at most `samples` of
/// them; otherwise the aligned tuples (every slot on one direction or its
/// negative) plus `samples` random tuples from a fixed seed.
pub fn spherical_constraint_slack(profiles: &[SphericalProfile], cost: &CostSpec, samples: usize) -> Result<SphericalSlack> {
    let p = check_profiles(profiles, cost)?;
    let grid = profiles[0].grid();
    let (nn, k) = (profiles.len(), grid.len());
    let n = grid.dim();
    let eval = |idx: &[usize]| -> f64 {
        let mut x = Vec::with_capacity(nn * n);
        let mut prod = 1.0;
        for (i, &d) in idx.iter().enumerate() {
            x.extend_from_slice(grid.dir(d));
            prod *= profiles[i].values()[d].powf(p[i]);
        }
        prod - cost.eval(&x)
    };
    let total = (k as f64).powi(nn as i32);
    let tuples: Vec<Vec<usize>> = if total <= samples as f64 {
        (0..k.pow(nn as u32))
            .map(|mut f| {
                (0..nn)
                    .map(|_| {
                        let d = f % k;
                        f /= k;
                        d
                    })
                    .collect()
            })
            .collect()
    } else {
        let mut out = Vec::new();
        for d in 0..k {
            for mask in 0..1usize << (nn - 1) {
                out.push((0..nn).map(|i| if i > 0 && mask >> (i - 1) & 1 == 1 { grid.neg(d) } else { d }).collect());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        out.extend((0..samples).map(|_| (0..nn).map(|_| rng.gen_range(0..k)).collect()));
        out
    };
    let vals = par::map_slice(&tuples, |t| eval(t));
    let (mut min, mut at) = (f64::INFINITY, 0);
    for (j, v) in vals.iter().enumerate() {
        if *v < min {
            min = *v;
            at = j;
        }
    }
    Ok(SphericalSlack { min_slack: min, witness: tuples[at].clone(), evaluated: tuples.len(), exhaustive: total <= samples as f64 })
}

/// Smallest profile for slot `i` that satisfies the product constraint
/// against the other profiles: `(max c(theta) / prod_{j != i}
/// phi_j^p_j(theta_j))^(1 / p_i)` over the other slots' directions.
/// Exhaustive over direction tuples, so intended for `N = 2` or coarse grids.
pub fn spherical_conjugate(profiles: &[SphericalProfile], cost: &CostSpec, i: usize) -> Result<SphericalProfile> {
    let p = check_profiles(profiles, cost)?;
    let grid = profiles[0].grid();
    let (nn, k, n) = (profiles.len(), grid.len(), grid.dim());
    if i >= nn {
        return Err(Error::InvalidInput(format!("slot {i} out of range")));
    }
    let others = k.pow(nn as u32 - 1);
    if (others as f64) * (k as f64) > 1e9 {
        return Err(Error::Intractable(format!("{others} tuples per direction")));
    }
    let raw = par::map_range(k, |d| {
        let mut x = vec![0.0; nn * n];
        x[i * n..(i + 1) * n].copy_from_slice(grid.dir(d));
        let mut best = f64::NEG_INFINITY;
        for mut f in 0..others {
            let mut prod = 1.0;
            for j in (0..nn).filter(|&j| j != i) {
                let e = f % k;
                f /= k;
                x[j * n..(j + 1) * n].copy_from_slice(grid.dir(e));
                prod *= profiles[j].values()[e].powf(p[j]);
            }
            best = best.max(cost.eval(&x) / prod);
        }
        best
    });
    if raw.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Hypothesis("cost is nonpositive against some direction; no positive conjugate profile".into()));
    }
    let vals: Vec<f64> = (0..k).map(|d| (0.5 * (raw[d] + raw[grid.neg(d)])).powf(1.0 / p[i])).collect();
    SphericalProfile::new(grid.clone(), vals)
}

/// Factor `int rho_i / phi_i^(n + r_i)` for each component.
pub fn spherical_integrals(profiles: &[SphericalProfile], measures: &[ReferenceMeasure], exp: &ExponentSystem) -> Result<Vec<f64>> {
    if exp.marginals() != profiles.len() {
        return Err(Error::DimensionMismatch { expected: exp.marginals(), got: profiles.len() });
    }
    if measures.len() != 1 && measures.len() != profiles.len() {
        return Err(Error::DimensionMismatch { expected: profiles.len(), got: measures.len() });
    }
    let n = exp.n as f64;
    let r = exp.r_f64();
    Ok(profiles
        .iter()
        .enumerate()
        .map(|(i, prof)| {
            let m = if measures.len() == 1 { &measures[0] } else { &measures[i] };
            let g = prof.grid();
            (0..g.len()).map(|k| g.weight(k) * m.density(g.dir(k)) / prof.values()[k].powf(n + r[i])).sum()
        })
        .collect())
}

/// `prod_i (int rho_i / phi_i^(n + r_i))^(1 / alpha_i)` by the direction-grid
/// quadrature.
pub fn spherical_bs_value(profiles: &[SphericalProfile], measures: &[ReferenceMeasure], exp: &ExponentSystem) -> Result<f64> {
    let alpha = exp.alpha_f64();
    Ok(spherical_integrals(profiles, measures, exp)?.iter().zip(&alpha).map(|(v, a)| v.powf(1.0 / a)).product())
}

/// The constant linking the two functionals on homogeneous tuples:
/// `prod_i (Gamma(k_i) / (beta_i (alpha_i tau_i)^k_i))^(1 / alpha_i)` with
/// `k_i = (n + r_i) / beta_i`.
pub fn spherical_constant(exp: &ExponentSystem) -> f64 {
    let n = exp.n as f64;
    let (alpha, beta, tau, r) = (exp.alpha_f64(), exp.beta_f64(), exp.tau_f64(), exp.r_f64());
    (0..exp.marginals())
        .map(|i| {
            let k = (n + r[i]) / beta[i];
            let radial = statrs::function::gamma::gamma(k) / (beta[i] * (alpha[i] * tau[i]).powf(k));
            radial.powf(1.0 / alpha[i])
        })
        .product()
}

/// Homogeneous tuple `Phi_i(x) = tau_i (|x| phi_i(x / |x|))^beta_i` on a
/// Cartesian grid, with the profile interpolated linearly in the angle.
pub fn lift_profiles(
    profiles: &[SphericalProfile],
    cost: &CostSpec,
    exp: &ExponentSystem,
    grid: &CartesianGrid,
) -> Result<FunctionTuple> {
    check_profiles(profiles, cost)?;
    if grid.dim != cost.dim() {
        return Err(Error::DimensionMismatch { expected: cost.dim(), got: grid.dim });
    }
    let (beta, tau) = (exp.beta_f64(), exp.tau_f64());
    let comps = profiles
        .iter()
        .enumerate()
        .map(|(i, prof)| {
            GridFunction::from_fn(grid, |x| {
                let t = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if t == 0.0 {
                    0.0
                } else {
                    tau[i] * (t * prof.eval(x)).powf(beta[i])
                }
            })
        })
        .collect();
    FunctionTuple::new(comps, cost.clone(), exp.alpha_f64())
}

/// Both sides of the admissibility equivalence for one profile tuple.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub spherical_slack: f64,
    /// Exact grid slack of the lifted tuple.
    pub lift_slack: f64,
    pub agree: bool,
}

/// Compares the sign of the spherical constraint slack with the sign of the
/// lifted tuple's admissibility slack. Values within `tie_tol` of zero count
/// as ties and agree with either sign.
pub fn admissibility_equivalence(
    profiles: &[SphericalProfile],
    cost: &CostSpec,
    exp: &ExponentSystem,
    grid: &CartesianGrid,
    tie_tol: f64,
) -> Result<EquivalenceReport> {
    let sph = spherical_constraint_slack(profiles, cost, 1 << 20)?.min_slack;
    let lift = exact_admissibility_slack(&lift_profiles(profiles, cost, exp, grid)?)?.min_slack;
    let sign = |v: f64| if v.abs() <= tie_tol { 0 } else if v > 0.0 { 1 } else { -1 };
    let (a, b) = (sign(sph), sign(lift));
    Ok(EquivalenceReport { spherical_slack: sph, lift_slack: lift, agree: a == b || a == 0 || b == 0 })
}

/// Outcome of one transport improvement step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub value_before: f64,
    pub value_after: f64,
    /// Constraint slack of the new profiles over all direction tuples.
    pub slack_after: f64,
    /// Optimal value of the `log c` transport problem.
    pub transport_value: f64,
    pub duality_gap: f64,
    /// `psi_i / phi_i` ranges: (min, max) per component.
    pub ratio_ranges: Vec<(f64, f64)>,
    pub improved: bool,
}

const IMPROVE_TOL: f64 = 1e-9;

/// Transport step: marginals proportional to `rho_i / phi_i^(n + r_i)` on the
/// direction grid, maximal transport for `log c` (tuples with `c <= 0` are
/// excluded from the support), and `psi_i = exp(u_i / p_i)` from the dual
/// potentials.
///
/// The dual is not unique on a grid. For `N = 2` the returned potentials are
/// the midpoint of the largest and smallest optimal duals sharing one anchor
/// value, which are the shortest-path solutions of the difference constraints
/// that optimality imposes. For larger `N` the simplex duals are used. In both
/// cases the potentials are then averaged with their reflection, which keeps
/// them optimal because the cost and the marginals are even.
pub fn spherical_transport_improve(
    profiles: &[SphericalProfile],
    cost: &CostSpec,
    exp: &ExponentSystem,
    measures: &[ReferenceMeasure],
) -> Result<(Vec<SphericalProfile>, ImprovementReport)> {
    let p = check_profiles(profiles, cost)?;
    let n = exp.n as f64;
    let r = exp.r_f64();
    let budget: f64 = p.iter().zip(&r).map(|(pi, ri)| pi / (n + ri)).sum();
    if budget > 1.0 + 1e-12 {
        return Err(Error::Hypothesis(format!("sum p_i / (n + r_i) = {budget} exceeds 1; the Holder step does not apply")));
    }
    let slack = spherical_constraint_slack(profiles, cost, 1 << 22)?;
    if slack.min_slack < -IMPROVE_TOL {
        let grid = profiles[0].grid();
        return Err(Error::Inadmissible {
            slack: slack.min_slack,
            witness: slack.witness.iter().map(|&d| grid.dir(d).to_vec()).collect(),
        });
    }
    let grid = profiles[0].grid().clone();
    let k = grid.len();
    let nn = profiles.len();
    let supports: Vec<Vec<Vec<f64>>> = vec![(0..k).map(|d| grid.dir(d).to_vec()).collect(); nn];
    let raw = CostTensor::from_cost(cost, &supports)?;
    let logc: Vec<f64> = raw.values().iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    if logc.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Hypothesis("cost is nonpositive on every direction tuple".into()));
    }
    let tensor = CostTensor::new(raw.sizes().to_vec(), logc)?;
    let marginals: Vec<Vec<f64>> = spherical_masses(profiles, measures, exp)?;
    let (coupling, pot) = solve_max_exact(&tensor, &marginals)?;
    let mut u = if nn == 2 { midpoint_duals(&tensor, &coupling, &pot).unwrap_or_else(|| pot.f.clone()) } else { pot.f.clone() };
    for ui in u.iter_mut() {
        let refl: Vec<f64> = (0..k).map(|d| 0.5 * (ui[d] + ui[grid.neg(d)])).collect();
        *ui = refl;
    }
    let psi: Vec<SphericalProfile> = u
        .iter()
        .zip(&p)
        .map(|(ui, pi)| SphericalProfile::new(grid.clone(), ui.iter().map(|v| (v / pi).exp()).collect()))
        .collect::<Result<_>>()?;
    let value_before = spherical_bs_value(profiles, measures, exp)?;
    let value_after = spherical_bs_value(&psi, measures, exp)?;
    let slack_after = spherical_constraint_slack(&psi, cost, 1 << 22)?.min_slack;
    let ratio_ranges = psi
        .iter()
        .zip(profiles)
        .map(|(a, b)| {
            a.values().iter().zip(b.values()).map(|(x, y)| x / y).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| {
                (lo.min(q), hi.max(q))
            })
        })
        .collect();
    let improved = value_after >= value_before * (1.0 - IMPROVE_TOL) && slack_after >= -IMPROVE_TOL;
    Ok((
        psi,
        ImprovementReport {
            value_before,
            value_after,
            slack_after,
            transport_value: pot.primal,
            duality_gap: pot.gap,
            ratio_ranges,
            improved,
        },
    ))
}

/// Probability weights `rho_i / phi_i^(n + r_i)` on the direction grid.
pub fn spherical_masses(profiles: &[SphericalProfile], measures: &[ReferenceMeasure], exp: &ExponentSystem) -> Result<Vec<Vec<f64>>> {
    if measures.len() != 1 && measures.len() != profiles.len() {
        return Err(Error::DimensionMismatch { expected: profiles.len(), got: measures.len() });
    }
    let n = exp.n as f64;
    let r = exp.r_f64();
    Ok(profiles
        .iter()
        .enumerate()
        .map(|(i, prof)| {
            let m = if measures.len() == 1 { &measures[0] } else { &measures[i] };
            let g = prof.grid();
            let w: Vec<f64> =
                (0..g.len()).map(|k| g.weight(k) * m.density(g.dir(k)) / prof.values()[k].powf(n + r[i])).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect())
}

/// Optimal two-slot duals as the midpoint of the extreme solutions.
///
/// Variables are `u(a)` and `v(b) = -u_2(b)`. Dual feasibility gives
/// `v(b) - u(a) <= -C(a, b)` on every finite cell and complementary
/// slackness gives `u(a) - v(b) <= C(a, b)` on the coupling support. With
/// `u(0) = 0`, shortest paths from `u(0)` give the largest solution and
/// shortest paths into `u(0)` the smallest. The simplex duals are a feasible
/// potential, so edge weights are reduced to be nonnegative and Dijkstra
/// applies. Returns `None` when some variable is not connected to the anchor.
fn midpoint_duals(c: &CostTensor, coupling: &Coupling, pot: &Potentials) -> Option<Vec<Vec<f64>>> {
    let (s0, s1) = (c.sizes()[0], c.sizes()[1]);
    let nodes = s0 + s1;
    let pi: Vec<f64> = pot.f[0].iter().copied().chain(pot.f[1].iter().map(|v| -v)).collect();
    let mut fwd: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
    let mut add = |from: usize, to: usize, w: f64| {
        let red = (w + pi[from] - pi[to]).max(0.0);
        fwd[from].push((to, red));
    };
    for a in 0..s0 {
        for b in 0..s1 {
            let v = c.values()[a * s1 + b];
            if v.is_finite() {
                add(a, s0 + b, -v);
            }
        }
    }
    for (idx, w) in &coupling.atoms {
        if *w > 0.0 {
            let v = c.values()[idx[0] * s1 + idx[1]];
            add(s0 + idx[1], idx[0], v);
        }
    }
    let mut bwd: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
    for (from, edges) in fwd.iter().enumerate() {
        for &(to, w) in edges {
            bwd[to].push((from, w));
        }
    }
    let down = dijkstra(&fwd, 0);
    let up = dijkstra(&bwd, 0);
    if down.iter().chain(&up).any(|d| !d.is_finite()) {
        return None;
    }
    // undo the reduction: true distance from 0 to j is red + pi[j] - pi[0]
    let x: Vec<f64> = (0..nodes)
        .map(|j| {
            let hi = down[j] + pi[j] - pi[0];
            let lo = -(up[j] + pi[0] - pi[j]);
            0.5 * (hi + lo)
        })
        .collect();
    Some(vec![x[..s0].to_vec(), x[s0..].iter().map(|v| -v).collect()])
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    struct Key(f64);
    impl PartialEq for Key {
        fn eq(&self, other: &Self) -> bool {
            self.cmp(other).is_eq()
        }
    }
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(to, w) in &adj[v] {
            let nd = d + w;
            if nd < dist[to] {
                dist[to] = nd;
                heap.push(Reverse((Key(nd), to)));
            }
        }
    }
    dist
}
