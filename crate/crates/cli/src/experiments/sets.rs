//! Set-level experiments: homogeneous lifts of body tuples and the
//! layer-cake identity for gauges.

use santalo_core::costs::CostSpec;
use santalo_core::functional::{bs_set_value, bs_value, exact_admissibility_slack, ExponentSystem};
use santalo_core::geometry::{integrate_exp, DirectionGrid, GridFunction, ReferenceMeasure, StarBody};
use santalo_core::transforms::{
    best_response_cycle, c_polar_component, homogeneous_lift, random_even_convex, BodyTuple, FunctionTuple,
};
use statrs::function::gamma::gamma;

use super::{exponents_for, or_failed, trial_name, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig, TupleSource};
use crate::report::Check;
use crate::trials::Runner;

const POLYGON_VERTICES: usize = 7;
const POLYGON_RADII: (f64, f64) = (0.4, 1.6);

pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    match cfg.mode() {
        "" | "lift" => lift(cfg, runner),
        "layer-cake" => layer_cake(cfg, runner),
        _ => Err(unknown_mode(cfg, &["lift", "layer-cake"])),
    }
}

fn directions(cfg: &ExperimentConfig, dim: usize) -> Result<DirectionGrid, ConfigError> {
    match cfg.directions {
        Some(k) => DirectionGrid::new(dim, k).map_err(|e| ConfigError(format!("field `directions`: {e}"))),
        None => Ok(DirectionGrid::default_for(dim)),
    }
}

fn homogeneity(m: &ReferenceMeasure) -> Result<f64, ConfigError> {
    m.homogeneity().ok_or_else(|| ConfigError::new("field `measures`: set experiments need homogeneous measures"))
}

fn random_polygon(dirs: &DirectionGrid, rng: &mut rand_chacha::ChaCha8Rng) -> santalo_core::Result<StarBody> {
    StarBody::random_polygon(dirs, rng, POLYGON_VERTICES, POLYGON_RADII.0, POLYGON_RADII.1)
}

/// Bodies for every slot but the last, which becomes their c-polar.
fn polar_completion(mut bodies: Vec<StarBody>, cost: &CostSpec) -> santalo_core::Result<BodyTuple> {
    let nn = cost.marginals();
    // placeholder slot, overwritten below
    bodies.push(StarBody::lp_ball(bodies[0].grid(), 2.0)?);
    let t = BodyTuple::new(bodies, cost.clone())?;
    let last = c_polar_component(&t, nn - 1)?.body;
    t.with_body(nn - 1, last)
}

/// `bs_value(lift) / bs_set_value` for a lift `tau_i |x|_K^beta_i` against
/// `r_i`-homogeneous measures: `prod (Gamma(1 + k_i) (alpha_i tau_i)^-k_i)^(1/alpha_i)`
/// with `k_i = (n + r_i) / beta_i`.
fn layer_cake_constant(exp: &ExponentSystem, r: &[f64]) -> f64 {
    let n = exp.n as f64;
    let (alpha, beta, tau) = (exp.alpha_f64(), exp.beta_f64(), exp.tau_f64());
    (0..alpha.len())
        .map(|i| {
            let k = (n + r[i]) / beta[i];
            (gamma(1.0 + k) * (alpha[i] * tau[i]).powf(-k)).powf(1.0 / alpha[i])
        })
        .product()
}

fn named_bodies(dirs: &DirectionGrid, name: &str, scale: f64, cost: &CostSpec) -> Result<Vec<StarBody>, ConfigError> {
    let p = match name {
        "disk" => 2.0,
        "square" => f64::INFINITY,
        "diamond" => 1.0,
        other => return Err(ConfigError(format!("unknown builtin body `{other}` (expected disk, square or diamond)"))),
    };
    let b = StarBody::lp_ball(dirs, p).expect("unit ball");
    let r: Vec<f64> = b.radial().iter().map(|x| x * scale).collect();
    let b = StarBody::from_radial(dirs, r).map_err(|e| ConfigError(format!("field `tuple.scale`: {e}")))?;
    Ok(vec![b; cost.marginals()])
}

/// Lifts of random polygon tuples are admissible and carry the layer-cake
/// constant; the lift of the reference body tuple dominates random
/// best-response function tuples.
fn lift(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let cost = cfg.cost_spec()?;
    let n = cost.dim();
    let exp = exponents_for(cfg, &cost)?;
    let grid = cfg.grid_for(n);
    let dirs = directions(cfg, n)?;
    let measures = cfg.measures_for(n)?;
    let r: Vec<f64> = (0..cost.marginals())
        .map(|i| homogeneity(&measures[if measures.len() == 1 { 0 } else { i }]))
        .collect::<Result<_, _>>()?;
    let constant = layer_cake_constant(&exp, &r);
    let slack_tol = cfg.slack_tol.unwrap_or(1e-6);
    let ratio_tol = cfg.ratio_tol.unwrap_or(1e-3);
    let rel_tol = cfg.rel_tol.unwrap_or(0.02);
    let alpha = exp.alpha_f64();
    let nn = cost.marginals();

    let (name, scale) = match &cfg.tuple {
        Some(TupleSource::Builtin { name, scale }) => (name.as_str(), *scale),
        None => ("disk", 1.0),
        Some(_) => return Err(ConfigError::new("field `tuple`: set lifts take a builtin body tuple as reference")),
    };
    let bodies = named_bodies(&dirs, name, scale, &cost)?;
    let reference = (|| {
        let t = polar_completion(bodies[..nn - 1].to_vec(), &cost)?;
        let lifted = homogeneous_lift(&t, &exp, &grid)?;
        bs_value(&lifted, &measures)
    })();
    let best = match reference {
        Ok(v) => v,
        Err(e) => return Ok(vec![Check::failed("reference lift", &e)]),
    };

    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let name = trial_name(k, "body tuple");
        let mut out = or_failed(name.clone(), (|| {
            let polys = (0..nn - 1).map(|_| random_polygon(&dirs, rng)).collect::<santalo_core::Result<Vec<_>>>()?;
            let t = polar_completion(polys, &cost)?;
            let lifted = homogeneous_lift(&t, &exp, &grid)?;
            let slack = exact_admissibility_slack(&lifted)?;
            let ratio = bs_value(&lifted, &measures)? / bs_set_value(&t, &alpha, &measures)?;
            Ok(vec![
                Check::ge(format!("{name}: lift admissibility slack"), slack.min_slack, 0.0, slack_tol)
                    .with_witness(slack.witness),
                Check::rel(format!("{name}: lift value / set value"), ratio, constant, ratio_tol),
            ])
        })());
        let fname = trial_name(k, "function tuple");
        out.extend(or_failed(fname.clone(), (|| {
            let comps = (0..nn).map(|_| random_even_convex(&grid, rng, false)).collect();
            let t = FunctionTuple::new(comps, cost.clone(), alpha.clone())?;
            let (t, _) = best_response_cycle(&t, &measures, 2, 0.0)?;
            let v = bs_value(&t, &measures)?;
            Ok(vec![Check::le(format!("{fname}: value <= reference lift"), v, best * (1.0 + rel_tol), 0.0)])
        })()));
        out
    });
    Ok(per_trial.into_iter().flatten().collect())
}

/// `int exp(-|x|_K^b) dm = m(K) Gamma(1 + (n + r) / b)` for random polygons.
fn layer_cake(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let n = cfg.cost.as_ref().map(|c| c.n).unwrap_or(2);
    let grid = cfg.grid_for(n);
    let dirs = directions(cfg, n)?;
    let m = cfg.measures_for(n)?.remove(0);
    let r = homogeneity(&m)?;
    let betas = cfg.betas.clone().unwrap_or_else(|| vec![2.0, 3.0, 4.0]);
    if betas.iter().any(|b| b.is_nan() || *b <= 0.0) {
        return Err(ConfigError::new("field `betas`: exponents must be positive"));
    }
    let tol = cfg.rel_tol.unwrap_or(1e-3);
    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let name = trial_name(k, "polygon");
        or_failed(name.clone(), (|| {
            let body = random_polygon(&dirs, rng)?;
            let mass = body.measure(&m)?;
            betas
                .iter()
                .map(|&b| {
                    let v = GridFunction::from_fn(&grid, |x| body.gauge(x).map(|g| g.powf(b)).unwrap_or(f64::INFINITY));
                    let lhs = integrate_exp(&v, 1.0, &m)?.value;
                    Ok(Check::rel(format!("{name}: layer cake, beta {b}"), lhs, mass * gamma(1.0 + (n as f64 + r) / b), tol))
                })
                .collect()
        })())
    });
    Ok(per_trial.into_iter().flatten().collect())
}
