use num_rational::Rational64;
use santalo_core::costs::CostFamily;
use santalo_core::functional::{exponents_from_cost, ExponentSystem};

use super::{exponents_for, unknown_mode, Outcome};
use crate::config::{ConfigError, ExperimentConfig};
use crate::report::Check;

fn exact(name: String, got: Rational64, want: Rational64) -> Check {
    let f = |q: Rational64| *q.numer() as f64 / *q.denom() as f64;
    Check::holds(name, "==", f(got), f(want), got == want).with_detail(format!("{got} vs {want}"))
}

/// Exact rational checks of the exponent system.
///
/// * `product-cost`: the N-fold product cost with flat densities gives
///   `alpha_i = 1`, `beta_i = N`, `tau_i = 1/N` and joint degree `N`.
/// * `weighted-product`: degrees `1/alpha_i` (from `degrees`, or from a
///   weighted-product cost) with flat densities give `beta_i = A` and
///   reproduce `alpha_i`.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    let mut checks = Vec::new();
    match cfg.mode() {
        "" | "product-cost" => {
            let cost = cfg.cost_spec()?;
            if cost.family() != &CostFamily::Product {
                return Err(ConfigError::new("mode `product-cost` needs a product cost"));
            }
            let e = exponents_for(cfg, &cost)?;
            let nn = Rational64::from_integer(cost.marginals() as i64);
            for i in 0..cost.marginals() {
                checks.push(exact(format!("alpha_{i}"), e.alpha[i], Rational64::from_integer(1)));
                checks.push(exact(format!("beta_{i}"), e.beta[i], nn));
                checks.push(exact(format!("tau_{i}"), e.tau[i], nn.recip()));
            }
            checks.push(exact("joint degree".into(), e.joint, nn));
        }
        "weighted-product" => {
            let e: ExponentSystem = match cfg.degrees() {
                Some(p) => {
                    let n = cfg.cost.as_ref().map(|c| c.n as i64).unwrap_or(1);
                    let r = cfg.density_degrees(p.len());
                    exponents_from_cost(&p, &r, n).map_err(|e| ConfigError(format!("field `degrees`: {e}")))?
                }
                None => {
                    let cost = cfg.cost_spec()?;
                    if !matches!(cost.family(), CostFamily::WeightedProduct { .. }) {
                        return Err(ConfigError::new("mode `weighted-product` needs `degrees` or a weighted-product cost"));
                    }
                    exponents_for(cfg, &cost)?
                }
            };
            for (i, p) in e.p.iter().enumerate() {
                checks.push(exact(format!("beta_{i} = A"), e.beta[i], e.a));
                checks.push(exact(format!("alpha_{i} = 1 / p_{i}"), e.alpha[i], p.recip()));
            }
        }
        _ => return Err(unknown_mode(cfg, &["product-cost", "weighted-product"])),
    }
    Ok(checks)
}
