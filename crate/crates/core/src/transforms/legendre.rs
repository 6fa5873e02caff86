use serde::{Deserialize, Serialize};

use super::envelope::LineEnvelope;
use super::FunctionTuple;
use crate::costs::Factor;
use crate::geometry::{CartesianGrid, GridFunction};
use crate::{par, Error, Result};

/// How a c-transform was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Independent 1-D problems per coordinate, inner maximum by line envelope.
    Separable,
    /// Two marginals in the plane: one line envelope per row of the other grid.
    RowEnvelope,
    /// Full scan over the product of the other grids.
    BruteForce,
}

/// A multiple c-Legendre transform together with its diagnostics.
#[derive(Clone, Debug)]
pub struct LegendreOutput {
    pub function: GridFunction,
    pub strategy: Strategy,
    /// Fraction of output nodes whose maximizer touches the grid boundary.
    pub boundary_activity: f64,
    /// Largest `|W(x) - W(-x)|` before symmetrization.
    pub asymmetry: f64,
}

/// Scan budget (cost evaluations) for the brute-force strategy.
const BRUTE_FORCE_BUDGET: f64 = 4.0e9;

/// `x_i -> max over the other grids of c(x) - sum_{j != i} V_j(x_j)`.
///
/// `+inf` values are excluded from the maximization domain. The result is
/// averaged with its reflection.
pub fn c_legendre_component(t: &FunctionTuple, i: usize) -> Result<LegendreOutput> {
    let nn = t.len();
    if i >= nn {
        return Err(Error::InvalidInput(format!("component index {i} out of range")));
    }
    for (j, v) in t.components().iter().enumerate() {
        if j != i && v.values().iter().all(|x| *x == f64::INFINITY) {
            return Err(Error::EmptyDomain);
        }
    }
    let n = t.grid().dim;
    let factors = t.cost().factors();
    let others_separable = (0..nn).filter(|&j| j != i).all(|j| n == 1 || t.component(j).is_separable());
    match factors {
        Some(f) if others_separable => separable(t, i, &f),
        Some(f) if n == 2 && nn == 2 => row_envelope(t, i, &f),
        _ => brute_force(t, i),
    }
}

fn axis_profile(v: &GridFunction, k: usize) -> &[f64] {
    if v.grid().dim == 1 {
        v.values()
    } else {
        &v.axes().expect("separable")[k]
    }
}

/// Exactly symmetrizes a 1-D profile, returning the prior asymmetry.
fn symmetrize_profile(w: &mut [f64]) -> f64 {
    let g = w.len();
    let mut asym: f64 = 0.0;
    for k in 0..g / 2 {
        let (a, b) = (w[k], w[g - 1 - k]);
        asym = asym.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        let m = 0.5 * (a + b);
        w[k] = m;
        w[g - 1 - k] = m;
    }
    asym
}

struct Profile1d {
    values: Vec<f64>,
    on_boundary: Vec<bool>,
}

/// Solves `w(t) = max_{t_j} prod_j g_j(t_j) g_i(t) - sum_j a_j(t_j)` on one axis.
fn solve_1d(grid: &CartesianGrid, gi: &Factor, others: &[(&Factor, &[f64])]) -> Result<Profile1d> {
    let axis = grid.axis();
    let g = grid.points;
    let (last_f, last_a) = others[others.len() - 1];
    let env = LineEnvelope::new((0..g).map(|z| (last_f.apply(axis[z]), -last_a[z], z))).ok_or(Error::EmptyDomain)?;
    let middle = &others[..others.len() - 1];
    // finite nodes of each middle slot
    let mids: Vec<Vec<(f64, f64, usize)>> = middle
        .iter()
        .map(|(f, a)| (0..g).filter(|&z| a[z].is_finite()).map(|z| (f.apply(axis[z]), a[z], z)).collect())
        .collect();
    if mids.iter().any(|m| m.is_empty()) {
        return Err(Error::EmptyDomain);
    }
    let boundary = |z: usize| z == 0 || z + 1 == g;
    let rows: Vec<(f64, bool)> = par::map_range(g, |k| {
        let s0 = gi.apply(axis[k]);
        if mids.is_empty() {
            let (v, z) = env.query(s0);
            return (v, boundary(z));
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_b = false;
        let mut idx = vec![0usize; mids.len()];
        loop {
            let mut s = s0;
            let mut base = 0.0;
            let mut b = false;
            for (m, &ix) in mids.iter().zip(&idx) {
                let (gv, av, z) = m[ix];
                s *= gv;
                base -= av;
                b |= boundary(z);
            }
            let (v, z) = env.query(s);
            let val = base + v;
            if val > best {
                best = val;
                best_b = b || boundary(z);
            }
            // odometer
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return (best, best_b);
                }
                idx[d] += 1;
                if idx[d] < mids[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    });
    let (values, on_boundary) = rows.into_iter().unzip();
    Ok(Profile1d { values, on_boundary })
}

fn separable(t: &FunctionTuple, i: usize, factors: &[Vec<Factor>]) -> Result<LegendreOutput> {
    let grid = t.grid().clone();
    let n = grid.dim;
    let mut axes = Vec::with_capacity(n);
    let mut bnd = Vec::with_capacity(n);
    let mut asym: f64 = 0.0;
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let others: Vec<(&Factor, &[f64])> = (0..t.len())
            .filter(|&j| j != i)
            .map(|j| (&factors[j][k], axis_profile(t.component(j), k)))
            .collect();
        let mut p = solve_1d(&grid, &factors[i][k], &others)?;
        asym = asym.max(symmetrize_profile(&mut p.values));
        axes.push(p.values);
        bnd.push(p.on_boundary);
    }
    let mut idx = [0usize; 3];
    let active = (0..grid.len())
        .filter(|&f| {
            grid.unflatten(f, &mut idx[..n]);
            (0..n).any(|k| bnd[k][idx[k]])
        })
        .count();
    let function = GridFunction::separable(&grid, axes)?;
    Ok(LegendreOutput {
        function,
        strategy: Strategy::Separable,
        boundary_activity: active as f64 / grid.len() as f64,
        asymmetry: asym,
    })
}

fn finish(grid: &CartesianGrid, half: Vec<(f64, bool)>, strategy: Strategy) -> Result<LegendreOutput> {
    let len = grid.len();
    let mut values = vec![0.0; len];
    let mut active = 0usize;
    for (f, (v, b)) in half.iter().enumerate() {
        values[f] = *v;
        values[len - 1 - f] = *v;
        if *b {
            active += if f == len - 1 - f { 1 } else { 2 };
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EmptyDomain);
    }
    Ok(LegendreOutput {
        function: GridFunction::from_values(grid, values)?,
        strategy,
        boundary_activity: active as f64 / len as f64,
        asymmetry: 0.0,
    })
}

/// Plane, two marginals, multiplicative cost `g0(x1)h0(y1) + g1(x2)h1(y2)`.
fn row_envelope(t: &FunctionTuple, i: usize, factors: &[Vec<Factor>]) -> Result<LegendreOutput> {
    let grid = t.grid().clone();
    let o = 1 - i;
    let g = grid.points;
    let axis = grid.axis();
    let vo = t.component(o);
    let envs: Vec<(f64, bool, LineEnvelope)> = (0..g)
        .filter_map(|r| {
            let env = LineEnvelope::new(
                (0..g).map(|z| (factors[o][1].apply(axis[z]), -vo.value(r * g + z), z)),
            )?;
            Some((factors[o][0].apply(axis[r]), r == 0 || r + 1 == g, env))
        })
        .collect();
    if envs.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let half: Vec<(f64, bool)> = par::map_range(grid.len() / 2 + 1, |f| {
        let (k1, k2) = (f / g, f % g);
        let (a, b) = (factors[i][0].apply(axis[k1]), factors[i][1].apply(axis[k2]));
        let mut best = f64::NEG_INFINITY;
        let mut bb = false;
        for (h0, rb, env) in &envs {
            let (v, z) = env.query(b);
            let val = a * h0 + v;
            if val > best {
                best = val;
                bb = *rb || z == 0 || z + 1 == g;
            }
        }
        (best, bb)
    });
    finish(&grid, half, Strategy::RowEnvelope)
}

fn brute_force(t: &FunctionTuple, i: usize) -> Result<LegendreOutput> {
    let grid = t.grid().clone();
    let nn = t.len();
    let others: Vec<usize> = (0..nn).filter(|&j| j != i).collect();
    let finite: Vec<Vec<usize>> = others
        .iter()
        .map(|&j| (0..grid.len()).filter(|&f| t.component(j).value(f).is_finite()).collect())
        .collect();
    let work = (grid.len() / 2 + 1) as f64 * finite.iter().map(|v| v.len() as f64).product::<f64>();
    if work > BRUTE_FORCE_BUDGET {
        return Err(Error::Intractable(format!(
            "brute-force c-transform needs {work:.2e} cost evaluations; use separable inputs or a coarser grid"
        )));
    }
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|f| grid.point_vec(f)).collect();
    let cost = t.cost();
    let half: Vec<(f64, bool)> =
        par::map_range(grid.len() / 2 + 1, |f| single_node(t, i, f, &others, &finite, &points));
    // The scan covered one representative per pair {x, -x}; evaluate the
    // reflected half too when the cost is not jointly even.
    if !cost.is_jointly_even() {
        let len = grid.len();
        let mirror = |f: usize| len - 1 - f;
        let refl: Vec<(f64, bool)> =
            par::map_range(len / 2 + 1, |f| single_node(t, i, mirror(f), &others, &finite, &points));
        let full: Vec<(f64, bool)> =
            half.iter().zip(refl).map(|(a, b)| (0.5 * (a.0 + b.0), a.1 || b.1)).collect();
        let asym = half
            .iter()
            .zip(&full)
            .map(|(a, b)| 2.0 * (a.0 - b.0).abs() / (1.0 + a.0.abs()))
            .fold(0.0, f64::max);
        let mut out = finish(&grid, full, Strategy::BruteForce)?;
        out.asymmetry = asym;
        return Ok(out);
    }
    finish(&grid, half, Strategy::BruteForce)
}

fn single_node(
    t: &FunctionTuple,
    i: usize,
    f: usize,
    others: &[usize],
    finite: &[Vec<usize>],
    points: &[Vec<f64>],
) -> (f64, bool) {
    let n = t.grid().dim;
    let mut x = vec![0.0; t.len() * n];
    x[i * n..(i + 1) * n].copy_from_slice(&points[f]);
    let mut idx = vec![0usize; others.len()];
    let mut best = f64::NEG_INFINITY;
    let mut bb = false;
    loop {
        let mut pen = 0.0;
        for (s, &j) in others.iter().enumerate() {
            let node = finite[s][idx[s]];
            x[j * n..(j + 1) * n].copy_from_slice(&points[node]);
            pen += t.component(j).value(node);
        }
        let val = t.cost().eval(&x) - pen;
        if val > best {
            best = val;
            bb = (0..others.len()).any(|s| t.grid().on_boundary(finite[s][idx[s]]));
        }
        let mut d = others.len();
        loop {
            if d == 0 {
                return (best, bb);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < finite[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}
