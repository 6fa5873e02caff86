use serde::{Deserialize, Serialize};

use super::{check_marginals, CostTensor, Coupling, Potentials};
use crate::{par, Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropicReport {
    pub iterations: usize,
    /// Largest L1 marginal error at exit.
    pub marginal_error: f64,
    pub converged: bool,
}

/// Multi-marginal Sinkhorn scaling in the log domain on the kernel
/// `exp(c / eps)`. The coupling is `exp((c + sum g_i) / eps)`; returned
/// potentials are `f_i = -g_i`.
///
/// Small `eps` is reached by annealing: the potentials are warm-started from
/// a run at the cost range, halving down to `eps`. Plain scaling from zero
/// converges only sublinearly when `exp(c / eps)` spans many magnitudes.
/// Stops when every marginal error is below `marginal_tol`. Running out of
/// iterations is reported in the [`EntropicReport`], not as an error.
pub fn solve_entropic(
    c: &CostTensor,
    marginals: &[Vec<f64>],
    eps: f64,
    max_iters: usize,
    marginal_tol: f64,
) -> Result<(Coupling, Potentials, EntropicReport)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("entropic regularization needs eps > 0".into()));
    }
    check_marginals(c, marginals)?;
    let idx: Vec<Vec<usize>> = (0..c.len()).map(|f| c.unflatten(f)).collect();
    let mut g: Vec<Vec<f64>> = c.sizes().iter().map(|s| vec![0.0; *s]).collect();
    let finite = c.values().iter().copied().filter(|v| v.is_finite());
    let range = finite.clone().fold(f64::NEG_INFINITY, f64::max) - finite.fold(f64::INFINITY, f64::min);
    let mut schedule = vec![eps];
    while schedule.last().unwrap() * 2.0 < range {
        schedule.push(schedule.last().unwrap() * 2.0);
    }
    schedule.reverse();
    let mut err = f64::INFINITY;
    let mut iters = 0;
    for (stage, &e) in schedule.iter().enumerate() {
        let last = stage + 1 == schedule.len();
        let budget = if last { max_iters - iters.min(max_iters) } else { max_iters / 10 / schedule.len() };
        let (used, stage_err) = sinkhorn(c, &idx, marginals, &mut g, e, budget, marginal_tol);
        iters += used;
        err = stage_err;
    }
    let exponent = |g: &[Vec<f64>], f: usize, skip: Option<usize>| -> f64 {
        let v = c.values()[f];
        if v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = idx[f].iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(i, &k)| g[i][k]).sum();
        (v + s) / eps
    };
    let pi = coupling_of(c, &idx, &g, &exponent);
    let f: Vec<Vec<f64>> = g.iter().map(|gi| gi.iter().map(|v| -v).collect()).collect();
    let primal = pi.value(c);
    let dual: f64 = f
        .iter()
        .zip(marginals)
        .map(|(fi, mi)| fi.iter().zip(mi).filter(|(_, m)| **m > 0.0).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    Ok((
        pi,
        Potentials { f, primal, dual, gap: dual - primal },
        EntropicReport { iterations: iters, marginal_error: err, converged: err < marginal_tol },
    ))
}

/// Runs at most `budget` sweeps at one regularization level, updating `g`
/// in place. Returns the sweeps used and the final marginal error.
fn sinkhorn(
    c: &CostTensor,
    idx: &[Vec<usize>],
    marginals: &[Vec<f64>],
    g: &mut [Vec<f64>],
    eps: f64,
    budget: usize,
    marginal_tol: f64,
) -> (usize, f64) {
    let nn = c.sizes().len();
    let exponent = |g: &[Vec<f64>], f: usize, skip: Option<usize>| -> f64 {
        let v = c.values()[f];
        if v == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = idx[f].iter().enumerate().filter(|(i, _)| Some(*i) != skip).map(|(i, &k)| g[i][k]).sum();
        (v + s) / eps
    };
    let mut err = f64::INFINITY;
    let mut iters = 0;
    while iters < budget {
        iters += 1;
        for i in 0..nn {
            let e: Vec<f64> = par::map_range(c.len(), |f| exponent(g, f, Some(i)));
            let mut mx = vec![f64::NEG_INFINITY; c.sizes()[i]];
            for (f, v) in e.iter().enumerate() {
                let k = idx[f][i];
                mx[k] = mx[k].max(*v);
            }
            let mut acc = vec![0.0; c.sizes()[i]];
            for (f, v) in e.iter().enumerate() {
                let k = idx[f][i];
                if mx[k] > f64::NEG_INFINITY {
                    acc[k] += (v - mx[k]).exp();
                }
            }
            for k in 0..c.sizes()[i] {
                let mu = marginals[i][k];
                g[i][k] = if mu > 0.0 && mx[k] > f64::NEG_INFINITY {
                    eps * (mu.ln() - mx[k] - acc[k].ln())
                } else {
                    f64::NEG_INFINITY
                };
            }
        }
        let pi = coupling_of(c, idx, g, &exponent);
        err = pi.marginal_error(marginals);
        if err < marginal_tol {
            break;
        }
    }
    (iters, err)
}

/// Log-weight of an atom from the slot potentials, its flat index and an
/// optional slot to leave out.
type AtomExponent<'a> = dyn Fn(&[Vec<f64>], usize, Option<usize>) -> f64 + Sync + 'a;

fn coupling_of(
    c: &CostTensor,
    idx: &[Vec<usize>],
    g: &[Vec<f64>],
    exponent: &AtomExponent<'_>,
) -> Coupling {
    let atoms = (0..c.len())
        .filter_map(|f| {
            let w = exponent(g, f, None).exp();
            (w > 0.0).then(|| (idx[f].clone(), w))
        })
        .collect();
    Coupling { sizes: c.sizes().to_vec(), atoms }
}
