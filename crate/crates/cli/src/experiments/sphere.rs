use rand_chacha::ChaCha8Rng;
use santalo_core::costs::CostSpec;
use santalo_core::functional::bs_value;
use santalo_core::geometry::DirectionGrid;
use santalo_core::sphere::{
    admissibility_equivalence, lift_profiles, spherical_bs_value, spherical_conjugate, spherical_constant,
    spherical_transport_improve, SphericalProfile,
};

use super::{exponents_for, or_failed, trial_name, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig};
use crate::report::Check;
use crate::trials::Runner;

const PROFILE_MODES: usize = 3;
const PROFILE_AMPLITUDE: f64 = 0.4;
const EXACT_TOL: f64 = 1e-9;
/// Scale of the last profile over the minimal feasible one in improvement trials.
const FEASIBLE_MARGIN: f64 = 1.02;

pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    match cfg.mode() {
        "" | "reduction" => reduction(cfg, runner),
        "improvement" => improvement(cfg, runner),
        _ => Err(unknown_mode(cfg, &["reduction", "improvement"])),
    }
}

fn directions(cfg: &ExperimentConfig, cost: &CostSpec) -> Result<DirectionGrid, ConfigError> {
    match cfg.directions {
        Some(k) => DirectionGrid::new(cost.dim(), k).map_err(|e| ConfigError(format!("field `directions`: {e}"))),
        None => Ok(DirectionGrid::default_for(cost.dim())),
    }
}

/// Random profiles in every slot but the last; the last is the minimal
/// feasible profile times `margin`, so the tuple is feasible iff `margin >= 1`.
fn profile_tuple(
    dirs: &DirectionGrid,
    cost: &CostSpec,
    rng: &mut ChaCha8Rng,
    margin: f64,
) -> santalo_core::Result<Vec<SphericalProfile>> {
    let nn = cost.marginals();
    let mut prof = (0..nn)
        .map(|_| SphericalProfile::random(dirs, rng, PROFILE_MODES, PROFILE_AMPLITUDE, 1.0))
        .collect::<santalo_core::Result<Vec<_>>>()?;
    prof[nn - 1] = spherical_conjugate(&prof, cost, nn - 1)?.scaled(margin)?;
    Ok(prof)
}

/// The lift to the plane multiplies the value by a fixed constant, and
/// spherical feasibility has the sign of the lift's admissibility slack.
/// Even trials are feasible (margin 1.05), odd ones infeasible (0.95).
fn reduction(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let cost = cfg.cost_spec()?;
    let exp = exponents_for(cfg, &cost)?;
    let dirs = directions(cfg, &cost)?;
    let grid = cfg.grid_for(cost.dim());
    let measures = cfg.measures_for(cost.dim())?;
    let tol = cfg.ratio_tol.unwrap_or(1e-3);
    let constant = spherical_constant(&exp);
    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let margin = if k % 2 == 0 { 1.05 } else { 0.95 };
        let name = trial_name(k, &format!("profiles, margin {margin}"));
        let out = (|| {
            let prof = profile_tuple(&dirs, &cost, rng, margin)?;
            let lifted = lift_profiles(&prof, &cost, &exp, &grid)?;
            let ratio = bs_value(&lifted, &measures)? / spherical_bs_value(&prof, &measures, &exp)?;
            let eq = admissibility_equivalence(&prof, &cost, &exp, &grid, EXACT_TOL)?;
            Ok((ratio, eq))
        })();
        match out {
            Ok((ratio, eq)) => {
                let checks = vec![
                    Check::rel(format!("{name}: lift value / spherical value"), ratio, constant, tol),
                    Check::holds(format!("{name}: slack signs agree"), "same-sign", eq.spherical_slack, eq.lift_slack, eq.agree),
                ];
                (Some(ratio), checks)
            }
            Err(e) => (None, vec![Check::failed(name, &e)]),
        }
    });
    let ratios: Vec<f64> = per_trial.iter().filter_map(|(r, _)| *r).collect();
    let mut checks: Vec<Check> = per_trial.into_iter().flat_map(|(_, c)| c).collect();
    if ratios.len() > 1 {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::rel("ratio spread over trials (max / min)", hi / lo, 1.0, tol));
    }
    Ok(checks)
}

/// One transport step never lowers the spherical value of a feasible tuple,
/// and at the constant profiles it only rescales them by constants with
/// product one.
fn improvement(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let cost = cfg.cost_spec()?;
    let exp = exponents_for(cfg, &cost)?;
    let dirs = directions(cfg, &cost)?;
    let measures = cfg.measures_for(cost.dim())?;
    let tol = cfg.ratio_tol.unwrap_or(1e-3);
    let nn = cost.marginals();

    let mut checks = or_failed("constant profiles", (|| {
        let one = SphericalProfile::constant(&dirs, 1.0)?;
        let (_, rep) = spherical_transport_improve(&vec![one; nn], &cost, &exp, &measures)?;
        let mut out: Vec<Check> = rep
            .ratio_ranges
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| Check::rel(format!("constant profiles: psi_{i} / phi_{i} flatness (max / min)"), hi / lo, 1.0, tol))
            .collect();
        let prod: f64 = rep.ratio_ranges.iter().map(|(lo, hi)| 0.5 * (lo + hi)).product();
        out.push(Check::close("constant profiles: product of ratios", prod, 1.0, tol));
        Ok(out)
    })());

    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let name = trial_name(k, "feasible profiles");
        or_failed(name.clone(), (|| {
            let prof = profile_tuple(&dirs, &cost, rng, FEASIBLE_MARGIN)?;
            let (_, rep) = spherical_transport_improve(&prof, &cost, &exp, &measures)?;
            Ok(vec![
                Check::ge(format!("{name}: value after >= value before"), rep.value_after, rep.value_before, EXACT_TOL),
                Check::ge(format!("{name}: slack after"), rep.slack_after, 0.0, EXACT_TOL),
            ])
        })())
    });
    checks.extend(per_trial.into_iter().flatten());
    Ok(checks)
}
