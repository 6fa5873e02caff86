//! Discrete transport experiments on finite supports, solved exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use santalo_core::costs::CostSpec;
use santalo_core::transport::{
    even_maximizer, monotonicity_check, reverse_certificate, transport_entropy_check, DiscreteInstance, MaximizerSearch,
};

use super::{or_failed, trial_name, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig};
use crate::report::Check;
use crate::trials::Runner;

const EXACT_TOL: f64 = 1e-9;
const MAXIMIZER_STARTS: usize = 6;
/// Random streams for per-cost instances start here, after the trial streams.
const INSTANCE_STREAM: u64 = 1 << 32;

pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    match cfg.mode() {
        "" | "monotonicity" => monotonicity(cfg, runner),
        "transport-entropy" => entropy(cfg, runner),
        "certificate" => certificate(cfg, runner),
        _ => Err(unknown_mode(cfg, &["monotonicity", "transport-entropy", "certificate"])),
    }
}

fn max_points(cfg: &ExperimentConfig) -> Result<usize, ConfigError> {
    match cfg.max_points.unwrap_or(6) {
        k if k >= 2 => Ok(k),
        _ => Err(ConfigError::new("field `max_points` must be at least 2")),
    }
}

/// `BS(V) <= BS(Phi)` for the duals `Phi` of the Gibbs marginals of random
/// admissible `V`, with complementary slackness on the coupling support.
fn monotonicity(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let costs = cfg.cost_list()?;
    let k_max = max_points(cfg)?;
    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let cost = costs[k % costs.len()].clone();
        let name = trial_name(k, &format!("{} N={}", cost.family_name(), cost.marginals()));
        or_failed(name.clone(), (|| {
            let (inst, v) = DiscreteInstance::random_admissible(rng, cost, k_max)?;
            let r = monotonicity_check(&inst, &v)?;
            let detail = if r.perturbed { "marginals perturbed by 1e-10 to break dual degeneracy" } else { "" };
            Ok(vec![
                Check::le(format!("{name}: log BS(V) <= log BS(Phi)"), r.log_bs_v, r.log_bs_phi, EXACT_TOL).with_detail(detail),
                Check::le(format!("{name}: complementary slackness"), r.slackness_residual, 0.0, EXACT_TOL),
                Check::le(format!("{name}: dual feasibility"), r.dual_violation, 0.0, EXACT_TOL),
            ])
        })())
    });
    Ok(per_trial.into_iter().flatten().collect())
}

/// Supports made of `pairs` point pairs `{a, -a}` with equal masses, so that
/// the even maximizer search applies.
fn symmetric_instance(rng: &mut ChaCha8Rng, cost: &CostSpec, pairs: usize) -> santalo_core::Result<DiscreteInstance> {
    let (nn, n) = (cost.marginals(), cost.dim());
    let mut supports = Vec::new();
    let mut masses = Vec::new();
    for _ in 0..nn {
        let mut pts = Vec::new();
        let mut ms = Vec::new();
        for _ in 0..pairs {
            let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..2.0) * if rng.gen() { 1.0 } else { -1.0 }).collect();
            let w = rng.gen_range(0.2..1.0);
            pts.push(a.iter().map(|x| -x).collect());
            pts.push(a);
            ms.extend([w, w]);
        }
        supports.push(pts);
        masses.push(ms);
    }
    DiscreteInstance::new(supports, masses, cost.clone(), vec![1.0; nn])
}

/// Random even probability vectors on a symmetric instance.
fn symmetric_nu(rng: &mut ChaCha8Rng, inst: &DiscreteInstance) -> Vec<Vec<f64>> {
    inst.supports()
        .iter()
        .map(|s| {
            let mut w = Vec::new();
            for _ in 0..s.len() / 2 {
                let x = rng.gen_range(0.0..1.0);
                w.extend([x, x]);
            }
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        })
        .collect()
}

type Solved = (DiscreteInstance, MaximizerSearch);

/// One symmetric instance per cost with its even maximizer.
fn instances(
    cfg: &ExperimentConfig,
    runner: &Runner,
) -> Result<Vec<(String, santalo_core::Result<Solved>)>, ConfigError> {
    let pairs = max_points(cfg)? / 2;
    Ok(cfg
        .cost_list()?
        .iter()
        .enumerate()
        .map(|(c, cost)| {
            let mut rng = runner.rng(INSTANCE_STREAM + c as u64);
            let label = format!("{} N={}", cost.family_name(), cost.marginals());
            let r = symmetric_instance(&mut rng, cost, pairs).and_then(|inst| {
                let mx = even_maximizer(&inst, MAXIMIZER_STARTS, &mut rng)?;
                Ok((inst, mx))
            });
            (label, r)
        })
        .collect())
}

/// `K_min_d(nu) <= sum_i Ent(nu_i) / alpha_i` at the even maximizer, with
/// both sides vanishing at `nu = mu`.
fn entropy(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let mut checks = Vec::new();
    for (label, inst) in instances(cfg, runner)? {
        let (inst, mx) = match inst {
            Ok(x) => x,
            Err(e) => {
                checks.push(Check::failed(format!("{label}: maximizer"), &e));
                continue;
            }
        };
        checks.push(Check::le(format!("{label}: maximizer fixed point"), mx.fixed_point_residual, 0.0, EXACT_TOL));
        checks.extend(or_failed(format!("{label}: nu = mu"), (|| {
            let r = transport_entropy_check(&inst, &mx.values, &[])?;
            Ok(vec![
                Check::close(format!("{label}: K_min at nu = mu"), r.self_trial.k_min, 0.0, EXACT_TOL),
                Check::close(format!("{label}: entropy at nu = mu"), r.self_trial.entropy_sum, 0.0, EXACT_TOL),
            ])
        })()));
        let per_trial = runner.map(cfg.trials(), |k, rng| {
            let name = format!("{label}: {}", trial_name(k, "K_min <= weighted entropy"));
            or_failed(name.clone(), (|| {
                let nu = symmetric_nu(rng, &inst);
                let r = transport_entropy_check(&inst, &mx.values, &[nu])?;
                let t = &r.trials[0];
                Ok(vec![Check::le(name.clone(), t.k_min, t.entropy_sum, EXACT_TOL)])
            })())
        });
        checks.extend(per_trial.into_iter().flatten());
    }
    Ok(checks)
}

/// Every even admissible challenger `V` satisfies `log BS(V) <= log BS(Phi)`
/// through the transport-entropy chain.
fn certificate(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let mut checks = Vec::new();
    for (label, inst) in instances(cfg, runner)? {
        let (inst, mx) = match inst {
            Ok(x) => x,
            Err(e) => {
                checks.push(Check::failed(format!("{label}: maximizer"), &e));
                continue;
            }
        };
        let refl = inst.reflections().expect("symmetric supports");
        let nn = inst.marginals();
        let per_trial = runner.map(cfg.trials(), |k, rng| {
            let name = format!("{label}: {}", trial_name(k, "challenger"));
            let mut v: Vec<Vec<f64>> = inst
                .supports()
                .iter()
                .zip(&refl)
                .map(|(s, r)| {
                    let raw: Vec<f64> = s.iter().map(|_| rng.gen_range(0.0..3.0)).collect();
                    r.iter().enumerate().map(|(a, &b)| 0.5 * (raw[a] + raw[b])).collect()
                })
                .collect();
            let shift = rng.gen_range(0.0..0.5);
            v[nn - 1] = inst.c_transform(&v, nn - 1).into_iter().map(|x| x + shift).collect();
            or_failed(name.clone(), (|| {
                let r = reverse_certificate(&inst, &mx.values, &[v])?;
                let o = &r.outcomes[0];
                let c = Check::le(format!("{name}: log BS(V) - log BS(Phi) <= 0"), o.log_ratio, 0.0, EXACT_TOL);
                Ok(vec![if r.pass { c } else { Check { pass: false, ..c }.with_detail("transport-entropy chain fails") }])
            })())
        });
        checks.extend(per_trial.into_iter().flatten());
    }
    Ok(checks)
}
