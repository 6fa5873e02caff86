use serde::{Deserialize, Serialize};

use super::{c_legendre_component, FunctionTuple};
use crate::functional::bs_value;
use crate::geometry::ReferenceMeasure;
use crate::{Error, Result};

/// Per-sweep log of a best-response cycle.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CycleTrace {
    /// Functional value after each sweep.
    pub bs_values: Vec<f64>,
    /// Sup-norm change of the tuple over each sweep.
    pub changes: Vec<f64>,
    /// Largest boundary-activity fraction seen in each sweep.
    pub boundary_activity: Vec<f64>,
    pub converged: bool,
    /// False if some sweep after the first lowered the value by more than 1e-10 relative.
    pub monotone: bool,
}

/// Values above this are treated as escaping the grid range.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Replaces each component by the c-transform of the others, cyclically,
/// until a sweep moves the tuple by less than `tol` in sup norm.
pub fn best_response_cycle(
    tuple: &FunctionTuple,
    measures: &[ReferenceMeasure],
    max_sweeps: usize,
    tol: f64,
) -> Result<(FunctionTuple, CycleTrace)> {
    let mut t = tuple.clone();
    let mut trace = CycleTrace { monotone: true, ..Default::default() };
    for sweep in 0..max_sweeps {
        let mut change: f64 = 0.0;
        let mut activity: f64 = 0.0;
        for i in 0..t.len() {
            let out = c_legendre_component(&t, i)?;
            let mag = out.function.sup_finite();
            if mag > DIVERGENCE_LIMIT || mag.is_nan() {
                return Err(Error::Divergence { component: i, magnitude: mag });
            }
            change = change.max(out.function.distance(t.component(i)));
            activity = activity.max(out.boundary_activity);
            t.replace(i, out.function)?;
        }
        let bs = bs_value(&t, measures)?;
        if sweep > 0 {
            let prev = *trace.bs_values.last().expect("previous sweep");
            if bs < prev * (1.0 - 1e-10) {
                trace.monotone = false;
            }
        }
        trace.bs_values.push(bs);
        trace.changes.push(change);
        trace.boundary_activity.push(activity);
        if change < tol {
            trace.converged = true;
            break;
        }
    }
    Ok((t, trace))
}
