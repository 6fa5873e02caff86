use santalo_core::geometry::{DirectionGrid, StarBody};
use santalo_core::symmetrize::{unconditionalize, MEASURE_TOL};
use santalo_core::transforms::{c_polar_component, BodyTuple};
use santalo_core::Error;

use super::{exponents_for, trial_name, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig};
use crate::report::Check;
use crate::trials::Runner;

/// Share of trials that must reach an unconditional tuple within `max_rounds`.
const CONVERGENCE_SHARE: f64 = 0.95;

/// Random polygon tuples (last slot the c-polar of the others) are swept to
/// unconditional tuples. Trial `k` uses measure `k mod len(measures)` in
/// every slot. Per-step measures and the set value must not decrease; a
/// trial that exhausts `max_rounds` counts against the convergence share
/// only.
pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    if !matches!(cfg.mode(), "" | "unconditionalize") {
        return Err(unknown_mode(cfg, &["unconditionalize"]));
    }
    let cost = cfg.cost_spec()?;
    if cost.dim() != 2 {
        return Err(ConfigError::new("symmetrization runs in the plane: `cost.n` must be 2"));
    }
    let exp = exponents_for(cfg, &cost)?;
    let alpha = exp.alpha_f64();
    let dirs = match cfg.directions {
        Some(k) => DirectionGrid::new(2, k).map_err(|e| ConfigError(format!("field `directions`: {e}")))?,
        None => DirectionGrid::default_for(2),
    };
    let measures = cfg.measures_for(2)?;
    let max_rounds = cfg.max_rounds.unwrap_or(8);
    let nn = cost.marginals();

    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let m = &measures[k % measures.len()];
        let name = trial_name(k, &format!("{:?} measure", m.kind()).to_lowercase());
        let out = (|| {
            let polys = (0..nn - 1)
                .map(|_| StarBody::random_polygon(&dirs, rng, 7, 0.4, 1.6))
                .collect::<santalo_core::Result<Vec<_>>>()?;
            let mut bodies = polys;
            bodies.push(StarBody::lp_ball(&dirs, 2.0)?);
            let t = BodyTuple::new(bodies, cost.clone())?;
            let last = c_polar_component(&t, nn - 1)?.body;
            let t = t.with_body(nn - 1, last)?;
            unconditionalize(&t, std::slice::from_ref(m), &alpha, max_rounds)
        })();
        match out {
            Ok((_, rep)) => {
                let step_ratio = rep
                    .steps
                    .iter()
                    .flat_map(|s| [s.after_i1 / s.before_i1, s.after_i2 / s.before_i2])
                    .fold(1.0, f64::min);
                let value_ratio = rep.values.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::min);
                let checks = vec![
                    Check::ge(format!("{name}: worst step measure ratio"), step_ratio, 1.0, MEASURE_TOL)
                        .with_detail(format!("{} steps, {} rounds", rep.steps.len(), rep.rounds)),
                    Check::ge(format!("{name}: worst set value ratio"), value_ratio, 1.0, MEASURE_TOL),
                ];
                (Some(true), checks)
            }
            Err(Error::NonConvergence { .. }) => (Some(false), vec![]),
            Err(e) => (None, vec![Check::failed(name, &e)]),
        }
    });
    let converged = per_trial.iter().filter(|(c, _)| *c == Some(true)).count();
    let total = per_trial.len().max(1);
    let mut checks: Vec<Check> = per_trial.into_iter().flat_map(|(_, c)| c).collect();
    checks.push(
        Check::ge(format!("share converged within {max_rounds} rounds"), converged as f64 / total as f64, CONVERGENCE_SHARE, 0.0)
            .with_detail(format!("{converged} of {total}")),
    );
    Ok(checks)
}
