//! Functional-level experiments: value bounds, maximizer homogeneity,
//! stationarity identities and the weighted-product inequality.

use rand::Rng;
use santalo_core::costs::{CostFamily, CostSpec};
use santalo_core::functional::{
    bs_value, exact_admissibility_slack, fit_homogeneity, stationarity_check, weighted_product_inequality_check,
    ExponentSystem, OrthantQuadrature, WeightProfile, HOMOGENEITY_SCALE,
};
use santalo_core::geometry::{CartesianGrid, GridFunction, ReferenceMeasure};
use santalo_core::transforms::{best_response_cycle, random_even_convex, FunctionTuple, TupleJson};
use santalo_core::transport::maximize_by_transport;

use super::{exponents_for, or_failed, trial_name, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig, TupleSource};
use crate::report::Check;
use crate::trials::Runner;

const MAXIMIZE_ROUNDS: usize = 200;
const MAXIMIZE_TOL: f64 = 1e-10;

struct Setup {
    cost: CostSpec,
    exp: ExponentSystem,
    grid: CartesianGrid,
    measures: Vec<ReferenceMeasure>,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        let cost = cfg.cost_spec()?;
        let exp = exponents_for(cfg, &cost)?;
        let grid = cfg.grid_for(cost.dim());
        let measures = cfg.measures_for(cost.dim())?;
        Ok(Self { cost, exp, grid, measures })
    }

    fn tuple(&self, comps: Vec<GridFunction>) -> santalo_core::Result<FunctionTuple> {
        FunctionTuple::new(comps, self.cost.clone(), self.exp.alpha_f64())
    }
}

pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    match cfg.mode() {
        "" | "bound" => bound(cfg, runner),
        "homogeneity" => homogeneity(cfg),
        "stationarity" => stationarity(cfg),
        "weighted-product" => weighted_product(cfg, runner),
        _ => Err(unknown_mode(cfg, &["bound", "homogeneity", "stationarity", "weighted-product"])),
    }
}

type Density = dyn Fn(&[f64]) -> f64 + Sync;

/// Named tuples: `gaussian` is `scale |x|^2 / 2` in every slot, `power` is
/// `scale sum_j |x_j|^N / N`, the self-dual tuple of the N-fold product cost.
fn named_tuple(s: &Setup, name: &str, scale: f64) -> Result<santalo_core::Result<FunctionTuple>, ConfigError> {
    let nn = s.cost.marginals();
    let v = match name {
        "gaussian" => GridFunction::from_fn(&s.grid, |x| scale * 0.5 * x.iter().map(|c| c * c).sum::<f64>()),
        "power" => GridFunction::separable_from_profile(&s.grid, |t| scale * t.powi(nn as i32) / nn as f64),
        other => return Err(ConfigError(format!("unknown builtin tuple `{other}` (expected gaussian or power)"))),
    };
    Ok(s.tuple(vec![v; nn]))
}

fn load_tuple(path: &std::path::Path) -> Result<santalo_core::Result<FunctionTuple>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let j: TupleJson = serde_json::from_str(&text).map_err(|e| {
        ConfigError(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    Ok(FunctionTuple::from_json(j))
}

/// Start of the transport maximization: `|x|^4/4 + |x|` on every axis.
fn start_tuple(s: &Setup, grid: &CartesianGrid, cost: &CostSpec) -> santalo_core::Result<FunctionTuple> {
    let v = GridFunction::separable_from_profile(grid, |t| t.powi(4) / 4.0 + t);
    FunctionTuple::new(vec![v; cost.marginals()], cost.clone(), s.exp.alpha_f64())
}

/// Reference tuple named by `reference`:
/// * `gaussian` or `power`: the named tuple with scale 1;
/// * `maximize`: transport maximization on the configured grid;
/// * `maximize-separable`: transport maximization of the one-dimensional
///   problem with the same axis, lifted to a sum over axes and polished by
///   two best-response sweeps. Needs a product cost.
fn reference(cfg: &ExperimentConfig, s: &Setup) -> Result<santalo_core::Result<FunctionTuple>, ConfigError> {
    let name = cfg.reference.as_deref().unwrap_or("maximize");
    Ok(match name {
        "gaussian" | "power" => return named_tuple(s, name, 1.0),
        "maximize" => start_tuple(s, &s.grid, &s.cost)
            .and_then(|t| maximize_by_transport(&t, &s.measures, MAXIMIZE_ROUNDS, MAXIMIZE_TOL))
            .map(|(t, _)| t),
        "maximize-separable" => {
            if s.cost.family() != &CostFamily::Product {
                return Err(ConfigError::new("reference `maximize-separable` needs a product cost"));
            }
            let line = CartesianGrid::new(1, s.grid.half_width, s.grid.points).expect("valid grid");
            let cost1 = CostSpec::product(s.cost.marginals(), 1);
            let leb1 = [ReferenceMeasure::lebesgue(1)];
            (|| {
                let (t1, _) = maximize_by_transport(&start_tuple(s, &line, &cost1)?, &leb1, MAXIMIZE_ROUNDS, MAXIMIZE_TOL)?;
                let comps = t1
                    .components()
                    .iter()
                    .map(|v| GridFunction::separable(&s.grid, vec![v.values().to_vec(); s.grid.dim]))
                    .collect::<santalo_core::Result<Vec<_>>>()?;
                Ok(best_response_cycle(&s.tuple(comps)?, &s.measures, 2, 0.0)?.0)
            })()
        }
        other => return Err(ConfigError(format!("field `reference`: unknown reference `{other}`"))),
    })
}

fn admissibility_check(name: &str, t: &FunctionTuple, tol: f64) -> santalo_core::Result<Check> {
    let r = exact_admissibility_slack(t)?;
    Ok(Check::ge(format!("{name}: admissibility slack"), r.min_slack, 0.0, tol).with_witness(r.witness))
}

fn bound(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let s = Setup::new(cfg)?;
    let slack_tol = cfg.slack_tol.unwrap_or(1e-6);
    let bound = cfg.bound.clone();
    let value_check = |name: &str, t: &FunctionTuple| -> santalo_core::Result<Option<Check>> {
        let v = bs_value(t, &s.measures)?;
        Ok(bound.as_ref().map(|b| Check::le(format!("{name}: value <= bound"), v, b.value * (1.0 + b.tol), 0.0)))
    };
    let mut checks = Vec::new();

    if let Some(oracle) = &cfg.oracle {
        let t = reference(cfg, &s)?;
        checks.extend(or_failed("reference value", t.and_then(|t| {
            let v = bs_value(&t, &s.measures)?;
            Ok(vec![Check::rel("reference value", v, oracle.value, oracle.tol)])
        })));
    }

    let fixed = match &cfg.tuple {
        Some(TupleSource::Builtin { name, scale }) => Some(named_tuple(&s, name, *scale)?),
        Some(TupleSource::File { path }) => Some(load_tuple(path)?),
        _ => None,
    };
    if let Some(t) = fixed {
        checks.extend(or_failed("tuple", t.and_then(|t| {
            if t.cost() != &s.cost {
                return Err(santalo_core::Error::InvalidInput("tuple cost differs from the configured cost".into()));
            }
            let adm = admissibility_check("tuple", &t, slack_tol)?;
            let mut out = vec![];
            if adm.pass {
                out.extend(value_check("tuple", &t)?);
            }
            out.insert(0, adm);
            Ok(out)
        })));
    }

    let separable = matches!(cfg.tuple, Some(TupleSource::Random { separable: true }));
    if matches!(cfg.tuple, None | Some(TupleSource::Random { .. })) {
        let per_trial = runner.map(cfg.trials(), |k, rng| {
            let name = trial_name(k, "best-response tuple");
            or_failed(name.clone(), (|| {
                let comps = (0..s.cost.marginals()).map(|_| random_even_convex(&s.grid, rng, separable)).collect();
                let (t, _) = best_response_cycle(&s.tuple(comps)?, &s.measures, 2, 0.0)?;
                let mut out = vec![admissibility_check(&name, &t, slack_tol)?];
                out.extend(value_check(&name, &t)?);
                Ok(out)
            })())
        });
        checks.extend(per_trial.into_iter().flatten());
    }
    Ok(checks)
}

fn homogeneity(cfg: &ExperimentConfig) -> Outcome {
    let s = Setup::new(cfg)?;
    let target = cfg.homogeneity.clone().ok_or_else(|| ConfigError::new("field `homogeneity` is required"))?;
    let t = reference(cfg, &s)?;
    Ok(or_failed("maximizer", t.map(|t| {
        t.components()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Check::close(format!("component {i}: fitted degree"), fit_homogeneity(v, HOMOGENEITY_SCALE), target.value, target.tol)
            })
            .collect()
    })))
}

fn stationarity(cfg: &ExperimentConfig) -> Outcome {
    let s = Setup::new(cfg)?;
    let st = cfg.stationarity.clone().ok_or_else(|| ConfigError::new("field `stationarity` is required"))?;
    let t = reference(cfg, &s)?;
    Ok(or_failed("stationarity", t.and_then(|t| {
        let r = stationarity_check(&t, &s.exp, &s.measures, None)?;
        Ok(vec![
            Check::close("first-order identity", r.potential_sum, r.target, st.first_order_tol),
            Check::close("variance identity", r.weighted_variance, st.variance_target, st.variance_tol),
        ])
    })))
}

/// Checks the weighted-product inequality with `rho = exp(-u)` on random
/// tuples `f_i(x) = exp(-s_i^(A alpha_i) |x|^A / A)` with `prod s_i >= 1`,
/// which satisfy the constraint by the weighted AM-GM inequality.
fn weighted_product(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    let s = Setup::new(cfg)?;
    let alpha = match s.cost.family() {
        CostFamily::WeightedProduct { alpha } => alpha.clone(),
        _ => return Err(ConfigError::new("mode `weighted-product` needs a weighted-product cost")),
    };
    if s.cost.dim() != 1 {
        return Err(ConfigError::new("mode `weighted-product` runs in dimension 1"));
    }
    let quad = OrthantQuadrature::new(1, s.grid.half_width, s.grid.points).expect("valid grid");
    let a: f64 = alpha.iter().map(|x| 1.0 / x).sum();
    let rho = WeightProfile::exp_neg();
    let nn = alpha.len();
    let per_trial = runner.map(cfg.trials(), |k, rng| {
        let mut sc: Vec<f64> = (0..nn).map(|_| rng.gen_range(0.7..1.5)).collect();
        let prod: f64 = sc.iter().product();
        sc[nn - 1] *= rng.gen_range(1.0..1.3) / prod;
        let fs: Vec<Box<Density>> = sc
            .iter()
            .zip(&alpha)
            .map(|(&si, &ai)| {
                let c = si.powf(a * ai) / a;
                Box::new(move |x: &[f64]| (-c * x[0].abs().powf(a)).exp()) as Box<Density>
            })
            .collect();
        let refs: Vec<&Density> = fs.iter().map(|f| f.as_ref()).collect();
        let name = trial_name(k, "weighted-product inequality");
        or_failed(name.clone(), (|| {
            let r = weighted_product_inequality_check(&refs, &rho, &alpha, &s.measures[0], &quad, 2000, k as u64)?;
            Ok(vec![Check::le(name.clone(), r.lhs, r.rhs, 1e-6 * r.rhs)])
        })())
    });
    Ok(per_trial.into_iter().flatten().collect())
}
