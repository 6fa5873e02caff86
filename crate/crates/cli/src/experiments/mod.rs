mod exponents;
mod functional;
mod sets;
mod sphere;
mod symmetrize;
mod transport;

use santalo_core::costs::CostSpec;
use santalo_core::functional::ExponentSystem;

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::report::Check;
use crate::trials::Runner;

type Outcome = Result<Vec<Check>, ConfigError>;

pub fn run(cfg: &ExperimentConfig, runner: &Runner) -> Outcome {
    match cfg.kind() {
        Kind::VerifyFunctional => functional::run(cfg, runner),
        Kind::VerifySets => sets::run(cfg, runner),
        Kind::Transport => transport::run(cfg, runner),
        Kind::Sphere => sphere::run(cfg, runner),
        Kind::Symmetrize => symmetrize::run(cfg, runner),
        Kind::Exponents => exponents::run(cfg),
    }
}

fn unknown_mode(cfg: &ExperimentConfig, known: &[&str]) -> ConfigError {
    ConfigError(format!("field `mode`: `{}` is not one of {known:?} for experiment `{}`", cfg.mode(), cfg.kind()))
}

fn exponents_for(cfg: &ExperimentConfig, cost: &CostSpec) -> Result<ExponentSystem, ConfigError> {
    ExponentSystem::for_cost(cost, cfg.density_degrees(cost.marginals()))
        .map_err(|e| ConfigError(format!("cost and density degrees give no exponent system: {e}")))
}

fn trial_name(k: usize, what: &str) -> String {
    format!("trial-{k:03}: {what}")
}

/// Either the checks of a computation or one failed check carrying its error.
fn or_failed(name: impl Into<String>, r: santalo_core::Result<Vec<Check>>) -> Vec<Check> {
    r.unwrap_or_else(|e| vec![Check::failed(name, &e)])
}
