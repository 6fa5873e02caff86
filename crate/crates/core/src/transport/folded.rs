//! One-dimensional product-type costs with even potentials: the transport
//! problem folds onto the half-line, where the cost is supermodular and the
//! comonotone coupling is optimal.

use serde::{Deserialize, Serialize};

use crate::costs::Factor;
use crate::functional::bs_value;
use crate::geometry::{CartesianGrid, GridFunction, ReferenceMeasure};
use crate::transforms::{best_response_cycle, FunctionTuple};
use crate::{Error, Result};

/// Comonotone coupling of the folded marginals with chain-integrated duals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldedTransport {
    /// Half-line nodes `t_0 = 0 < t_1 < ...`.
    pub nodes: Vec<f64>,
    /// Folded marginal weights per slot.
    pub weights: Vec<Vec<f64>>,
    /// Coupling cells (one node index per slot) with their mass.
    pub cells: Vec<(Vec<usize>, f64)>,
    /// Dual potentials on the half-line nodes, zero at the origin.
    pub potentials: Vec<Vec<f64>>,
    /// Identity factors force an even number of negative coordinates when unfolding.
    pub parity_slots: Vec<usize>,
}

impl FoldedTransport {
    /// Coupling on the full line: each folded cell is spread evenly over the
    /// sign patterns that keep the cost equal to its folded value.
    pub fn unfolded_atoms(&self) -> Vec<(Vec<Vec<f64>>, f64)> {
        let nn = self.weights.len();
        let patterns: Vec<u32> = (0..1u32 << nn)
            .filter(|mask| self.parity_slots.iter().filter(|&&i| mask >> i & 1 == 1).count() % 2 == 0)
            .collect();
        let share = 1.0 / patterns.len() as f64;
        let mut out = Vec::with_capacity(self.cells.len() * patterns.len());
        for (idx, w) in &self.cells {
            for mask in &patterns {
                let pts = idx
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| vec![if mask >> i & 1 == 1 { -self.nodes[k] } else { self.nodes[k] }])
                    .collect();
                out.push((pts, w * share));
            }
        }
        out
    }

    /// Unfolds the potentials to even grid functions.
    pub fn potentials_on(&self, grid: &CartesianGrid) -> Vec<GridFunction> {
        let c = grid.center();
        self.potentials
            .iter()
            .map(|phi| {
                let vals = (0..grid.points).map(|k| phi[k.abs_diff(c)]).collect();
                GridFunction::from_values(grid, vals).expect("even by construction")
            })
            .collect()
    }
}

fn folded_factors(t: &FunctionTuple) -> Result<Vec<Factor>> {
    if t.grid().dim != 1 {
        return Err(Error::Intractable("folded transport is implemented for n = 1".into()));
    }
    let f = t
        .cost()
        .factors()
        .ok_or_else(|| Error::Hypothesis("folded transport needs a product-type cost".into()))?;
    Ok(f.into_iter().map(|row| row[0].clone()).collect())
}

/// Optimal coupling of `nu_i ~ exp(-alpha_i V_i) m_i` for a one-dimensional
/// product-type cost, and duals obtained by integrating the cost along the
/// coupling's monotone support, starting from 0 at the origin.
pub fn folded_transport(t: &FunctionTuple, measures: &[ReferenceMeasure]) -> Result<FoldedTransport> {
    let factors = folded_factors(t)?;
    let grid = t.grid();
    let nn = t.len();
    let c0 = grid.center();
    let kk = grid.points - c0;
    let nodes: Vec<f64> = (0..kk).map(|k| grid.coord(c0 + k)).collect();
    let mut weights = Vec::with_capacity(nn);
    for i in 0..nn {
        let m = if measures.len() == 1 { &measures[0] } else { &measures[i] };
        let v = t.component(i);
        let a = t.alpha()[i];
        let vmin = (0..kk).map(|k| v.value(c0 + k)).fold(f64::INFINITY, f64::min);
        if !vmin.is_finite() {
            return Err(Error::DegenerateIntegral { component: i });
        }
        let w: Vec<f64> = (0..kk)
            .map(|k| {
                let val = v.value(c0 + k);
                let fold = if k == 0 { 1.0 } else { 2.0 };
                if val.is_finite() {
                    fold * grid.axis_weight(c0 + k) * m.density(&[nodes[k]]) * (-a * (val - vmin)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        weights.push(w.into_iter().map(|x| x / s).collect::<Vec<f64>>());
    }
    // tails[i][k] = mass of nodes >= k
    let tails: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| {
            let mut t = vec![0.0; kk + 1];
            for k in (0..kk).rev() {
                t[k] = t[k + 1] + w[k];
            }
            t
        })
        .collect();
    let fcost = |idx: &[usize]| -> f64 { idx.iter().enumerate().map(|(i, &k)| factors[i].apply(nodes[k]).abs()).product() };

    // walk from the outer end toward the origin, matching equal tail levels
    let mut p = vec![kk - 1; nn];
    let mut level = 0.0;
    let mut states = vec![p.clone()];
    let mut cells = Vec::new();
    loop {
        let hi = (0..nn).map(|i| tails[i][p[i]]).fold(f64::INFINITY, f64::min);
        let mass = hi - level;
        if mass > 0.0 {
            cells.push((p.clone(), mass));
        }
        level = level.max(hi);
        if p.iter().all(|&k| k == 0) {
            break;
        }
        let mut moved = false;
        for i in 0..nn {
            if p[i] > 0 && tails[i][p[i]] <= hi {
                p[i] -= 1;
                moved = true;
            }
        }
        if !moved {
            // every slot at the level is already at the origin
            for q in p.iter_mut() {
                if *q > 0 {
                    *q -= 1;
                }
            }
        }
        states.push(p.clone());
    }
    // integrate the duals from the origin outward along the same chain
    let mut potentials = vec![vec![0.0; kk]; nn];
    let mut cur = vec![0usize; nn];
    for s in states.iter().rev().skip(1) {
        for i in 0..nn {
            while cur[i] < s[i] {
                let before = fcost(&cur);
                cur[i] += 1;
                potentials[i][cur[i]] = potentials[i][cur[i] - 1] + fcost(&cur) - before;
            }
        }
    }
    let parity_slots = factors.iter().enumerate().filter(|(_, f)| matches!(f, Factor::Identity)).map(|(i, _)| i).collect();
    Ok(FoldedTransport { nodes, weights, cells, potentials, parity_slots })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MaximizeTrace {
    pub bs_values: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
}

/// Alternates the transport step (replace the tuple by the duals of its own
/// Gibbs marginals) with best-response sweeps, until the functional value
/// stabilizes to relative `tol`.
pub fn maximize_by_transport(
    t: &FunctionTuple,
    measures: &[ReferenceMeasure],
    max_rounds: usize,
    tol: f64,
) -> Result<(FunctionTuple, MaximizeTrace)> {
    let (mut cur, _) = best_response_cycle(t, measures, 2, 0.0)?;
    let mut trace = MaximizeTrace { bs_values: vec![bs_value(&cur, measures)?], ..Default::default() };
    for round in 0..max_rounds {
        let ft = folded_transport(&cur, measures)?;
        let phi = ft.potentials_on(cur.grid());
        let next = FunctionTuple::new(phi, cur.cost().clone(), cur.alpha().to_vec())?;
        let (next, _) = best_response_cycle(&next, measures, 2, 0.0)?;
        let bs = bs_value(&next, measures)?;
        let prev = *trace.bs_values.last().expect("initial value");
        trace.bs_values.push(bs);
        trace.rounds = round + 1;
        cur = next;
        if (bs - prev).abs() <= tol * prev {
            trace.converged = true;
            break;
        }
    }
    Ok((cur, trace))
}
