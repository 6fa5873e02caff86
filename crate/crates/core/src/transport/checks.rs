use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{entropy_weights, solve_max_exact, solve_min_exact, CostTensor, Potentials};
use crate::costs::CostSpec;
use crate::geometry::ReferenceMeasure;
use crate::transforms::FunctionTuple;
use crate::{Error, Result};

/// Potentials on finite supports with reference masses, a cost and weights.
#[derive(Clone, Debug)]
pub struct DiscreteInstance {
    supports: Vec<Vec<Vec<f64>>>,
    reference: Vec<Vec<f64>>,
    cost: CostSpec,
    alpha: Vec<f64>,
    tensor: CostTensor,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl DiscreteInstance {
    pub fn new(supports: Vec<Vec<Vec<f64>>>, reference: Vec<Vec<f64>>, cost: CostSpec, alpha: Vec<f64>) -> Result<Self> {
        let nn = cost.marginals();
        if supports.len() != nn || reference.len() != nn || alpha.len() != nn {
            return Err(Error::DimensionMismatch { expected: nn, got: supports.len() });
        }
        for (s, r) in supports.iter().zip(&reference) {
            if s.len() != r.len() || r.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                return Err(Error::InvalidInput("reference masses must be positive, one per support point".into()));
            }
            if s.iter().any(|p| p.len() != cost.dim()) {
                return Err(Error::DimensionMismatch { expected: cost.dim(), got: s[0].len() });
            }
        }
        if alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("alpha must be positive".into()));
        }
        let tensor = CostTensor::from_cost(&cost, &supports)?;
        Ok(Self { supports, reference, cost, alpha, tensor })
    }

    /// Grid nodes every `stride` steps from the origin, with reference masses
    /// `density * cell weight`, and the tuple's values there.
    pub fn from_tuple(t: &FunctionTuple, measures: &[ReferenceMeasure], stride: usize) -> Result<(Self, Vec<Vec<f64>>)> {
        let grid = t.grid();
        let c = grid.center() as isize;
        let s = stride.max(1) as isize;
        let steps: Vec<usize> = (-(c / s)..=(c / s)).map(|j| (c + j * s) as usize).collect();
        let n = grid.dim;
        let mut nodes = Vec::new();
        let mut idx = vec![0usize; n];
        loop {
            nodes.push(grid.flatten(&idx.iter().map(|&k| steps[k]).collect::<Vec<_>>()));
            let mut d = 0;
            loop {
                if d == n {
                    break;
                }
                idx[d] += 1;
                if idx[d] < steps.len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == n {
                break;
            }
        }
        let mut supports = Vec::new();
        let mut reference = Vec::new();
        let mut values = Vec::new();
        for i in 0..t.len() {
            let m = if measures.len() == 1 { &measures[0] } else { &measures[i] };
            let keep: Vec<usize> = nodes.iter().copied().filter(|&f| t.component(i).value(f).is_finite()).collect();
            supports.push(keep.iter().map(|&f| grid.point_vec(f)).collect());
            reference.push(
                keep.iter().map(|&f| m.density(&grid.point_vec(f)) * (s as f64 * grid.spacing()).powi(n as i32)).collect(),
            );
            values.push(keep.iter().map(|&f| t.component(i).value(f)).collect());
        }
        Ok((Self::new(supports, reference, t.cost().clone(), t.alpha().to_vec())?, values))
    }

    pub fn supports(&self) -> &[Vec<Vec<f64>>] {
        &self.supports
    }

    pub fn reference(&self) -> &[Vec<f64>] {
        &self.reference
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn tensor(&self) -> &CostTensor {
        &self.tensor
    }

    pub fn marginals(&self) -> usize {
        self.supports.len()
    }

    /// `log prod_i (sum_k m_i(k) exp(-alpha_i V_i(k)))^(1/alpha_i)`.
    pub fn log_bs(&self, v: &[Vec<f64>]) -> f64 {
        (0..self.marginals())
            .map(|i| {
                let a = self.alpha[i];
                log_sum_exp(v[i].iter().zip(&self.reference[i]).map(|(x, m)| m.ln() - a * x)) / a
            })
            .sum()
    }

    /// Probability vectors `nu_i ~ exp(-alpha_i V_i) m_i`.
    pub fn gibbs(&self, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.marginals())
            .map(|i| {
                let a = self.alpha[i];
                let logs: Vec<f64> = v[i].iter().zip(&self.reference[i]).map(|(x, m)| m.ln() - a * x).collect();
                let z = log_sum_exp(logs.iter().copied());
                logs.iter().map(|l| (l - z).exp()).collect()
            })
            .collect()
    }

    /// `min (sum V_i - c)` over all support combinations and the minimizing cell.
    pub fn slack(&self, v: &[Vec<f64>]) -> (f64, Vec<usize>) {
        let mut best = (f64::INFINITY, vec![0; self.marginals()]);
        for f in 0..self.tensor.len() {
            let c = self.tensor.values()[f];
            if c == f64::NEG_INFINITY {
                continue;
            }
            let idx = self.tensor.unflatten(f);
            let s: f64 = idx.iter().enumerate().map(|(i, &k)| v[i][k]).sum::<f64>() - c;
            if s < best.0 {
                best = (s, idx);
            }
        }
        best
    }

    /// Exact c-transform of slot `i` on the supports.
    pub fn c_transform(&self, v: &[Vec<f64>], i: usize) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.supports[i].len()];
        for f in 0..self.tensor.len() {
            let c = self.tensor.values()[f];
            if c == f64::NEG_INFINITY {
                continue;
            }
            let idx = self.tensor.unflatten(f);
            let val = c - idx.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, &k)| v[j][k]).sum::<f64>();
            out[idx[i]] = out[idx[i]].max(val);
        }
        out
    }

    /// Index of `-x` in each support, when every support is symmetric.
    pub fn reflections(&self) -> Option<Vec<Vec<usize>>> {
        self.supports
            .iter()
            .map(|s| {
                s.iter()
                    .map(|p| {
                        let q: Vec<f64> = p.iter().map(|x| -x).collect();
                        s.iter().position(|r| r.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12))
                    })
                    .collect::<Option<Vec<usize>>>()
            })
            .collect()
    }

    /// Random supports of 2..=`max_points` points in `[-2, 2]^n`, random
    /// reference masses, and admissible values: random potentials in all
    /// but the last slot, and the c-transform plus a random slack in the last.
    pub fn random_admissible<R: Rng>(
        rng: &mut R,
        cost: CostSpec,
        max_points: usize,
    ) -> Result<(Self, Vec<Vec<f64>>)> {
        let (nn, n) = (cost.marginals(), cost.dim());
        let mut supports = Vec::new();
        let mut reference = Vec::new();
        for _ in 0..nn {
            let k = rng.gen_range(2..=max_points.max(2));
            supports.push((0..k).map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect());
            reference.push((0..k).map(|_| rng.gen_range(0.2..1.0)).collect());
        }
        let alpha = vec![1.0; nn];
        let inst = Self::new(supports, reference, cost, alpha)?;
        let mut v: Vec<Vec<f64>> =
            inst.supports.iter().map(|s| s.iter().map(|_| rng.gen_range(-1.0..2.0)).collect()).collect();
        let last = nn - 1;
        let w = inst.c_transform(&v, last);
        v[last] = w.iter().map(|x| x + rng.gen_range(0.0..0.5)).collect();
        Ok((inst, v))
    }
}

/// Outcome of the monotonicity check on one instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub log_bs_v: f64,
    pub log_bs_phi: f64,
    /// Largest `|sum Phi_i - c|` on the coupling support.
    pub slackness_residual: f64,
    /// Largest `c - sum Phi_i` over all cells.
    pub dual_violation: f64,
    pub gap: f64,
    pub perturbed: bool,
    pub potentials: Vec<Vec<f64>>,
    pub pass: bool,
}

/// Solves the maximization problem with marginals `nu_i ~ exp(-alpha_i V_i) m_i`
/// and compares the functional at `V` and at the dual potentials.
pub fn monotonicity_check(inst: &DiscreteInstance, v: &[Vec<f64>]) -> Result<MonotonicityReport> {
    let (slack, cell) = inst.slack(v);
    if slack < -1e-9 {
        return Err(Error::Inadmissible {
            slack,
            witness: cell.iter().enumerate().map(|(i, &k)| inst.supports[i][k].clone()).collect(),
        });
    }
    let nu = inst.gibbs(v);
    let (mut pi, mut pot) = solve_max_exact(&inst.tensor, &nu)?;
    let mut perturbed = false;
    if pot.max_violation(&inst.tensor) > 1e-9 || pot.gap.abs() > 1e-9 {
        // numerically degenerate basis: re-solve with slightly perturbed weights
        let nu2: Vec<Vec<f64>> = nu
            .iter()
            .map(|w| {
                let p: Vec<f64> = w.iter().enumerate().map(|(k, x)| x * (1.0 + 1e-10 * (k as f64 + 1.0))).collect();
                let s: f64 = p.iter().sum();
                p.into_iter().map(|x| x / s).collect()
            })
            .collect();
        (pi, pot) = solve_max_exact(&inst.tensor, &nu2)?;
        perturbed = true;
    }
    let log_bs_v = inst.log_bs(v);
    let log_bs_phi = inst.log_bs(&pot.f);
    let slackness_residual = pot.slackness_residual(&inst.tensor, &pi);
    let dual_violation = pot.max_violation(&inst.tensor);
    let pass = log_bs_v <= log_bs_phi + 1e-9 && slackness_residual < 1e-9 && dual_violation <= 1e-9;
    Ok(MonotonicityReport {
        log_bs_v,
        log_bs_phi,
        slackness_residual,
        dual_violation,
        gap: pot.gap,
        perturbed,
        potentials: pot.f,
        pass,
    })
}

/// [`monotonicity_check`] on a grid tuple restricted to every `stride`-th node.
pub fn monotonicity_check_tuple(t: &FunctionTuple, measures: &[ReferenceMeasure], stride: usize) -> Result<MonotonicityReport> {
    let (inst, v) = DiscreteInstance::from_tuple(t, measures, stride)?;
    monotonicity_check(&inst, &v)
}

/// Result of the multi-start search for an even discrete maximizer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximizerSearch {
    pub values: Vec<Vec<f64>>,
    pub log_bs: f64,
    /// Sup-norm change in the last fixed-point step of the winning start.
    pub fixed_point_residual: f64,
    pub starts: usize,
    /// Log-functional reached by every start.
    pub start_values: Vec<f64>,
}

fn symmetrize(v: &mut [Vec<f64>], refl: &[Vec<usize>]) {
    for (vi, ri) in v.iter_mut().zip(refl) {
        let old = vi.clone();
        for (k, &r) in ri.iter().enumerate() {
            vi[k] = 0.5 * (old[k] + old[r]);
        }
    }
}

/// Even maximizer of the discrete functional over admissible tuples on
/// symmetric supports, by the fixed-point map `V -> duals(gibbs(V))`
/// (averaged with reflections, then one best-response sweep) from several
/// random even starts.
///
/// The averaging keeps dual feasibility whenever every single-slot sign flip
/// can be compensated by flipping another slot, which holds for the
/// multiplicative families.
pub fn even_maximizer<R: Rng>(inst: &DiscreteInstance, starts: usize, rng: &mut R) -> Result<MaximizerSearch> {
    let refl = inst
        .reflections()
        .ok_or_else(|| Error::Hypothesis("even maximizer search needs symmetric supports".into()))?;
    let nn = inst.marginals();
    let mut best: Option<MaximizerSearch> = None;
    let mut start_values = Vec::new();
    for _ in 0..starts.max(1) {
        let mut v: Vec<Vec<f64>> =
            inst.supports.iter().map(|s| s.iter().map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
        symmetrize(&mut v, &refl);
        let w = inst.c_transform(&v, nn - 1);
        v[nn - 1] = w.iter().zip(&v[nn - 1]).map(|(a, b)| a.max(*b)).collect();
        symmetrize(&mut v, &refl);
        // the symmetrized last slot dominates the transform when the
        // transform itself is even, so v is admissible here
        let mut residual = f64::INFINITY;
        for _ in 0..500 {
            let nu = inst.gibbs(&v);
            let (_, pot) = solve_max_exact(&inst.tensor, &nu)?;
            let mut phi = pot.f;
            symmetrize(&mut phi, &refl);
            for i in 0..nn {
                phi[i] = inst.c_transform(&phi, i);
            }
            residual = phi
                .iter()
                .zip(&v)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            v = phi;
            if residual < 1e-12 {
                break;
            }
        }
        let lb = inst.log_bs(&v);
        start_values.push(lb);
        if best.as_ref().is_none_or(|b| lb > b.log_bs) {
            best = Some(MaximizerSearch {
                values: v,
                log_bs: lb,
                fixed_point_residual: residual,
                starts,
                start_values: Vec::new(),
            });
        }
    }
    let mut out = best.expect("at least one start");
    out.start_values = start_values;
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyTrial {
    pub k_min: f64,
    /// `sum_i Ent_{mu_i}(nu_i) / alpha_i`.
    pub entropy_sum: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportEntropyReport {
    /// `min (sum Phi_i - c)` over all support combinations.
    pub min_d: f64,
    /// The trial with `nu = mu`.
    pub self_trial: EntropyTrial,
    pub trials: Vec<EntropyTrial>,
    pub pass: bool,
}

/// For `d = sum Phi_i - c` and `mu_i ~ exp(-alpha_i Phi_i) m_i`, checks
/// `K_min^d(nu) <= sum Ent_{mu_i}(nu_i) / alpha_i` for each supplied `nu`
/// and for `nu = mu`.
pub fn transport_entropy_check(
    inst: &DiscreteInstance,
    phi: &[Vec<f64>],
    nus: &[Vec<Vec<f64>>],
) -> Result<TransportEntropyReport> {
    let (min_d, cell) = inst.slack(phi);
    if min_d < -1e-9 {
        return Err(Error::Inadmissible {
            slack: min_d,
            witness: cell.iter().enumerate().map(|(i, &k)| inst.supports[i][k].clone()).collect(),
        });
    }
    let d_values: Vec<f64> = (0..inst.tensor.len())
        .map(|f| {
            let idx = inst.tensor.unflatten(f);
            let c = inst.tensor.values()[f];
            if c == f64::NEG_INFINITY {
                // excluded cells never help the minimization
                1e300
            } else {
                idx.iter().enumerate().map(|(i, &k)| phi[i][k]).sum::<f64>() - c
            }
        })
        .collect();
    let d = CostTensor::new(inst.tensor.sizes().to_vec(), d_values)?;
    let mu = inst.gibbs(phi);
    let trial = |nu: &[Vec<f64>]| -> Result<EntropyTrial> {
        let entropy_sum: f64 = nu.iter().zip(&mu).zip(&inst.alpha).map(|((n, m), a)| entropy_weights(n, m) / a).sum();
        if entropy_sum == f64::INFINITY {
            return Ok(EntropyTrial { k_min: f64::NAN, entropy_sum, pass: true });
        }
        let (_, pot): (_, Potentials) = solve_min_exact(&d, nu)?;
        Ok(EntropyTrial { k_min: pot.primal, entropy_sum, pass: pot.primal <= entropy_sum + 1e-9 })
    };
    let self_trial = trial(&mu)?;
    let trials = nus.iter().map(|nu| trial(nu)).collect::<Result<Vec<_>>>()?;
    let pass = self_trial.k_min.abs() < 1e-9 && self_trial.entropy_sum < 1e-9 && trials.iter().all(|t| t.pass);
    Ok(TransportEntropyReport { min_d, self_trial, trials, pass })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChallengerOutcome {
    pub slack: f64,
    /// Set when the challenger is inadmissible.
    pub witness: Option<Vec<Vec<f64>>>,
    /// `sum int (Phi_i - V_i) dnu_i` with `nu` built from `V`.
    pub potential_gap: f64,
    pub k_min: f64,
    pub entropy_sum: f64,
    /// `log BS(V) - log BS(Phi)`.
    pub log_ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub outcomes: Vec<ChallengerOutcome>,
    /// Admissible challenger with the largest `log_ratio`.
    pub tightest: Option<usize>,
    pub pass: bool,
}

/// Verifies, for each challenger `V`, the chain
/// `log BS(V) - log BS(Phi) = sum int (Phi - V) dnu - sum Ent(nu)/alpha
/// <= K_min^d(nu) - sum Ent(nu)/alpha <= 0` with `nu ~ exp(-alpha V) m`.
pub fn reverse_certificate(
    inst: &DiscreteInstance,
    phi: &[Vec<f64>],
    challengers: &[Vec<Vec<f64>>],
) -> Result<CertificateReport> {
    let nus: Vec<Vec<Vec<f64>>> = challengers.iter().map(|v| inst.gibbs(v)).collect();
    let te = transport_entropy_check(inst, phi, &nus)?;
    let lphi = inst.log_bs(phi);
    let mut outcomes = Vec::new();
    for ((v, nu), tr) in challengers.iter().zip(&nus).zip(&te.trials) {
        let (slack, cell) = inst.slack(v);
        let potential_gap: f64 = (0..inst.marginals())
            .map(|i| phi[i].iter().zip(&v[i]).zip(&nu[i]).map(|((p, x), w)| w * (p - x)).sum::<f64>())
            .sum();
        let log_ratio = inst.log_bs(v) - lphi;
        if slack < -1e-9 {
            outcomes.push(ChallengerOutcome {
                slack,
                witness: Some(cell.iter().enumerate().map(|(i, &k)| inst.supports[i][k].clone()).collect()),
                potential_gap,
                k_min: tr.k_min,
                entropy_sum: tr.entropy_sum,
                log_ratio,
                pass: false,
            });
            continue;
        }
        let chain = potential_gap - tr.entropy_sum;
        let pass = potential_gap <= tr.k_min + 1e-9
            && (chain - log_ratio).abs() <= 1e-9 * (1.0 + log_ratio.abs())
            && tr.pass
            && log_ratio <= 1e-9;
        outcomes.push(ChallengerOutcome {
            slack,
            witness: None,
            potential_gap,
            k_min: tr.k_min,
            entropy_sum: tr.entropy_sum,
            log_ratio,
            pass,
        });
    }
    let tightest = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.witness.is_none())
        .max_by(|a, b| a.1.log_ratio.total_cmp(&b.1.log_ratio))
        .map(|(i, _)| i);
    let pass = outcomes.iter().filter(|o| o.witness.is_none()).all(|o| o.pass) && te.self_trial.pass;
    Ok(CertificateReport { outcomes, tightest, pass })
}
