use super::BodyTuple;
use crate::costs::Factor;
use crate::geometry::{StarBody, SupportOracle};
use crate::{par, Error, Result};

/// A c-polar body with the per-direction suprema it was built from.
#[derive(Clone, Debug)]
pub struct PolarOutput {
    pub body: StarBody,
    /// `S(theta_k) = sup c(theta_k, y)` over the other bodies.
    pub sup_values: Vec<f64>,
}

const VERTEX_SCAN_BUDGET: f64 = 4.0e9;

fn boundary_points(b: &StarBody) -> Vec<Vec<f64>> {
    if b.dim() == 1 {
        let r = b.radial()[0];
        vec![vec![r], vec![-r]]
    } else {
        b.vertices().into_iter().map(|v| v.to_vec()).collect()
    }
}

/// `sup` of the cost with slot `i` pinned to each grid direction, other
/// slots ranging over their bodies. Multilinear costs attain the sup at
/// boundary vertices; the last free slot is handled by a support oracle.
fn slot_sup(bodies: &BodyTuple, i: usize) -> Result<Vec<f64>> {
    let nn = bodies.len();
    let grid = bodies.body(0).grid().clone();
    let n = grid.dim();
    let cost = bodies.cost();
    let others: Vec<usize> = (0..nn).filter(|&j| j != i).collect();
    let pts: Vec<Vec<Vec<f64>>> = others.iter().map(|&j| boundary_points(bodies.body(j))).collect();
    let half = grid.len() / 2;
    let multilinear = n == 2
        && cost.factors().is_some_and(|f| f.iter().all(|row| row.iter().all(|g| matches!(g, Factor::Identity))));
    let vals: Vec<f64> = if multilinear {
        let last = *others.last().expect("N >= 2");
        let oracle = SupportOracle::new(bodies.body(last));
        let mids = &pts[..pts.len() - 1];
        par::map_range(half, |k| {
            let d = grid.dir(k);
            let mut idx = vec![0usize; mids.len()];
            let mut best = f64::NEG_INFINITY;
            loop {
                let mut w = [d[0], d[1]];
                for (m, &ix) in mids.iter().zip(&idx) {
                    w[0] *= m[ix][0];
                    w[1] *= m[ix][1];
                }
                best = best.max(oracle.support(w));
                let mut q = 0;
                loop {
                    if q == idx.len() {
                        return best;
                    }
                    idx[q] += 1;
                    if idx[q] < mids[q].len() {
                        break;
                    }
                    idx[q] = 0;
                    q += 1;
                }
            }
        })
    } else {
        let work = half as f64 * pts.iter().map(|p| p.len() as f64).product::<f64>();
        if work > VERTEX_SCAN_BUDGET {
            return Err(Error::Intractable(format!("c-polar vertex scan needs {work:.2e} evaluations")));
        }
        par::map_range(half, |k| {
            let mut x = vec![0.0; nn * n];
            x[i * n..(i + 1) * n].copy_from_slice(grid.dir(k));
            let mut idx = vec![0usize; pts.len()];
            let mut best = f64::NEG_INFINITY;
            loop {
                for (s, &j) in others.iter().enumerate() {
                    x[j * n..(j + 1) * n].copy_from_slice(&pts[s][idx[s]]);
                }
                best = best.max(cost.eval(&x));
                let mut q = 0;
                loop {
                    if q == idx.len() {
                        return best;
                    }
                    idx[q] += 1;
                    if idx[q] < pts[q].len() {
                        break;
                    }
                    idx[q] = 0;
                    q += 1;
                }
            }
        })
    };
    let mut out = vec![0.0; grid.len()];
    for (k, v) in vals.into_iter().enumerate() {
        out[k] = v;
        out[grid.neg(k)] = v;
    }
    Ok(out)
}

/// c-polar transform of slot `i`: radial function `S(theta)^(-1/p_i)`.
pub fn c_polar_component(bodies: &BodyTuple, i: usize) -> Result<PolarOutput> {
    if i >= bodies.len() {
        return Err(Error::InvalidInput(format!("slot {i} out of range")));
    }
    let p = bodies
        .cost()
        .degrees()
        .map(|d| d[i])
        .filter(|p| *p > 0.0)
        .ok_or_else(|| Error::Hypothesis(format!("cost is not homogeneous of positive degree in slot {i}")))?;
    let sup_values = slot_sup(bodies, i)?;
    if sup_values.iter().all(|s| *s <= 0.0) {
        return Err(Error::Hypothesis("cost is never positive on the other bodies".into()));
    }
    if let Some(k) = sup_values.iter().position(|s| *s <= 0.0) {
        return Err(Error::InvalidInput(format!("c-polar of slot {i} is unbounded in direction {k}")));
    }
    let radial: Vec<f64> = sup_values.iter().map(|s| s.powf(-1.0 / p)).collect();
    let body = StarBody::from_radial(bodies.body(0).grid(), radial)?;
    Ok(PolarOutput { body, sup_values })
}

/// `sup c` over the product of the bodies, used to check `c <= 1`.
pub fn body_tuple_max_cost(bodies: &BodyTuple) -> Result<f64> {
    let last = bodies.len() - 1;
    match bodies.cost().degrees().map(|d| d[last]).filter(|p| *p > 0.0) {
        Some(p) => {
            let s = slot_sup(bodies, last)?;
            let r = bodies.body(last).radial();
            Ok(s.iter().zip(r).map(|(s, r)| s * r.powf(p)).fold(f64::NEG_INFINITY, f64::max))
        }
        None => {
            let pts: Vec<Vec<Vec<f64>>> = bodies.bodies().iter().map(boundary_points).collect();
            let work: f64 = pts.iter().map(|p| (p.len() + 1) as f64).product();
            if work > VERTEX_SCAN_BUDGET {
                return Err(Error::Intractable(format!("vertex scan needs {work:.2e} evaluations")));
            }
            // include the origin of each slot, since a cost without per-slot
            // degrees need not peak on the boundary
            let n = bodies.body(0).dim();
            let pts: Vec<Vec<Vec<f64>>> =
                pts.into_iter().map(|mut p| {
                    p.push(vec![0.0; n]);
                    p
                }).collect();
            let mut idx = vec![0usize; pts.len()];
            let mut x = vec![0.0; pts.len() * n];
            let mut best = f64::NEG_INFINITY;
            loop {
                for (s, p) in pts.iter().enumerate() {
                    x[s * n..(s + 1) * n].copy_from_slice(&p[idx[s]]);
                }
                best = best.max(bodies.cost().eval(&x));
                let mut q = 0;
                loop {
                    if q == idx.len() {
                        return Ok(best);
                    }
                    idx[q] += 1;
                    if idx[q] < pts[q].len() {
                        break;
                    }
                    idx[q] = 0;
                    q += 1;
                }
            }
        }
    }
}
