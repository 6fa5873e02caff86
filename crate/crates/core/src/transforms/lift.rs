use super::{body_tuple_max_cost, BodyTuple, FunctionTuple};
use crate::functional::ExponentSystem;
use crate::geometry::{CartesianGrid, GridFunction};
use crate::{Error, Result};

/// Potentials `tau_i * ||x||_{K_i}^{beta_i}` on `grid`.
///
/// Refuses exponent systems that do not match the cost or dimension, and body
/// tuples with `sup c > 1` on their product.
pub fn homogeneous_lift(bodies: &BodyTuple, exp: &ExponentSystem, grid: &CartesianGrid) -> Result<FunctionTuple> {
    let cost = bodies.cost();
    if exp.marginals() != bodies.len() || exp.n as usize != grid.dim || grid.dim != cost.dim() {
        return Err(Error::InvalidInput("exponent system does not match the body tuple".into()));
    }
    if let Some(d) = cost.degrees() {
        if d.iter().zip(exp.p_f64()).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::Hypothesis("exponent degrees differ from the cost degrees".into()));
        }
    }
    let top = body_tuple_max_cost(bodies)?;
    if top > 1.0 + 1e-9 {
        return Err(Error::Hypothesis(format!("body tuple is not admissible: sup c = {top}")));
    }
    let (tau, beta) = (exp.tau_f64(), exp.beta_f64());
    let components = bodies
        .bodies()
        .iter()
        .enumerate()
        .map(|(i, b)| GridFunction::from_fn(grid, |x| tau[i] * b.gauge_unchecked(x).powf(beta[i])))
        .collect();
    FunctionTuple::new(components, cost.clone(), exp.alpha_f64())
}
