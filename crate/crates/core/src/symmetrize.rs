//! Coordinate symmetrization of admissible body tuples.
//!
//! One `(j, i1, i2)` step replaces body `i1` by its Steiner symmetral along
//! `e_j` and body `i2` by the c-polar of all the others. Under the structural
//! hypotheses on the cost and the two reference measures neither measure
//! decreases. Sweeping the step over all axes and all slots but the last
//! makes every body unconditional.

use serde::{Deserialize, Serialize};

use crate::costs::{check_jii_assumption, check_sign_symmetry};
use crate::functional::bs_set_value;
use crate::geometry::{steiner_symmetrize, ReferenceMeasure, StarBody};
use crate::transforms::{body_tuple_max_cost, c_polar_component, BodyTuple};
use crate::{Error, Result};

/// Samples used to re-verify cost and measure hypotheses.
const HYPOTHESIS_SAMPLES: usize = 2000;
const HYPOTHESIS_SEED: u64 = 0x51ab;
/// Relative slack allowed when comparing measures before and after a step.
/// Re-sampling the exact Steiner symmetral and the c-polar on the direction
/// grid replaces each by an inscribed polygon; with 360 directions and
/// polygonal inputs the observed loss stays near 2e-4.
pub const MEASURE_TOL: f64 = 1e-3;
/// Unconditionality threshold on the radial function.
pub const UNCONDITIONAL_TOL: f64 = 1e-6;

/// Record of one `(j, i1, i2)` step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetrizationStep {
    pub axis: usize,
    pub i1: usize,
    pub i2: usize,
    pub before_i1: f64,
    pub after_i1: f64,
    /// Measure of the body given in slot `i2`.
    pub before_i2: f64,
    /// Measure of the c-polar of the unmodified other slots; at least
    /// `before_i2` for an admissible input.
    pub before_i2_polar: f64,
    pub after_i2: f64,
    pub slack_before: f64,
    pub slack_after: f64,
    /// Largest overshoot of the averaged sections `(A(r) + A(-r)) / 2` outside
    /// the new body's sections, over sampled heights.
    pub section_excess: f64,
    pub monotone: bool,
}

fn verify_cost(bodies: &BodyTuple, j: usize, i1: usize, i2: usize) -> Result<()> {
    let cost = bodies.cost();
    let rep = check_jii_assumption(cost, j, i1, i2, HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED);
    if !rep.pass() {
        return Err(Error::Hypothesis(format!("({j},{i1},{i2})-assumption fails: {rep:?}")));
    }
    for i in 0..bodies.len() {
        if check_sign_symmetry(cost, i, HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED).signs.is_none() {
            return Err(Error::Hypothesis(format!("c-polar of slot {i} need not be symmetric: no sign symmetry")));
        }
    }
    Ok(())
}

fn check_bodies(bodies: &BodyTuple) -> Result<f64> {
    if let Some(i) = bodies.bodies().iter().position(|b| !b.is_convex()) {
        return Err(Error::Hypothesis(format!("body {i} is not convex")));
    }
    let slack = 1.0 - body_tuple_max_cost(bodies)?;
    if slack < -1e-9 {
        return Err(Error::Hypothesis(format!("tuple is not admissible: sup c = {}", 1.0 - slack)));
    }
    Ok(slack)
}

/// Largest amount by which the midpoint of the sections of `a` at heights
/// `r` and `-r` along `e_axis` sticks out of the section of `b` at `r`.
pub fn section_average_excess(a: &StarBody, b: &StarBody, axis: usize, heights: usize) -> f64 {
    if a.dim() != 2 {
        return 0.0;
    }
    let o = 1 - axis;
    let top = (0..a.grid().len()).map(|k| a.vertex(k)[axis].abs()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for s in 0..heights {
        let r = top * (s as f64 + 0.5) / heights as f64;
        let (Some(up), Some(down)) = (a.chord(o, r), a.chord(o, -r)) else { continue };
        let mid = (0.5 * (up.0 + down.0), 0.5 * (up.1 + down.1));
        match b.chord(o, r) {
            Some((lo, hi)) => worst = worst.max(lo - mid.0).max(mid.1 - hi),
            None => worst = worst.max(mid.1 - mid.0),
        }
    }
    worst
}

/// One `(j, i1, i2)` step. Hypotheses are checked before anything is
/// computed: the cost passes the structural checks, `m_i1` is even and
/// decreasing along `e_j`, `m_i2` has symmetric log-concave sections, the
/// bodies are convex and the tuple is admissible.
pub fn jii_symmetrize(
    bodies: &BodyTuple,
    j: usize,
    i1: usize,
    i2: usize,
    m_i1: &ReferenceMeasure,
    m_i2: &ReferenceMeasure,
) -> Result<(BodyTuple, SymmetrizationStep)> {
    let nn = bodies.len();
    let n = bodies.body(0).dim();
    if i1 == i2 || i1 >= nn || i2 >= nn || j >= n {
        return Err(Error::InvalidInput(format!("bad step indices j={j}, i1={i1}, i2={i2}")));
    }
    verify_cost(bodies, j, i1, i2)?;
    let v1 = m_i1.axial_monotone_violation(j, HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED);
    if v1 > 1e-9 {
        return Err(Error::Hypothesis(format!("measure of slot {i1} is not even and decreasing along e_{j} ({v1:e})")));
    }
    let v2 = m_i2.sectional_log_concavity_violation(j, HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED);
    if v2 > 1e-9 {
        return Err(Error::Hypothesis(format!("measure of slot {i2} has non log-concave sections ({v2:e})")));
    }
    let slack_before = check_bodies(bodies)?;

    let a_polar = c_polar_component(bodies, i2)?.body;
    let sym = steiner_symmetrize(bodies.body(i1), j)?;
    let staged = bodies.with_body(i1, sym)?;
    let b = c_polar_component(&staged, i2)?.body;
    let out = staged.with_body(i2, b)?;

    let before_i1 = bodies.body(i1).measure(m_i1)?;
    let after_i1 = out.body(i1).measure(m_i1)?;
    let before_i2 = bodies.body(i2).measure(m_i2)?;
    let before_i2_polar = a_polar.measure(m_i2)?;
    let after_i2 = out.body(i2).measure(m_i2)?;
    let slack_after = 1.0 - body_tuple_max_cost(&out)?;
    let section_excess = section_average_excess(&a_polar, out.body(i2), j, 64);
    let monotone = after_i1 >= before_i1 * (1.0 - MEASURE_TOL) && after_i2 >= before_i2 * (1.0 - MEASURE_TOL);
    Ok((
        out,
        SymmetrizationStep {
            axis: j,
            i1,
            i2,
            before_i1,
            after_i1,
            before_i2,
            before_i2_polar,
            after_i2,
            slack_before,
            slack_after,
            section_excess,
            monotone,
        },
    ))
}

/// Step log and value trace of [`unconditionalize`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnconditionalReport {
    pub steps: Vec<SymmetrizationStep>,
    /// `bs_set_value` of the input, after the initial polar replacement of
    /// the last slot, and after every round.
    pub values: Vec<f64>,
    /// Measures per slot, same schedule as `values`.
    pub measures: Vec<Vec<f64>>,
    pub rounds: usize,
    /// Largest unconditional residual over the output bodies.
    pub residual: f64,
}

impl UnconditionalReport {
    pub fn values_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] * (1.0 - MEASURE_TOL))
    }

    pub fn measures_monotone(&self) -> bool {
        self.measures.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| *b >= a * (1.0 - MEASURE_TOL)))
    }
}

fn residual(t: &BodyTuple) -> f64 {
    t.bodies().iter().map(|b| b.unconditional_residual()).fold(0.0, f64::max)
}

/// Sweeps `(j, i, N-1)` steps over axes `j` and slots `i < N-1` until every
/// body is unconditional, keeping the last slot equal to the c-polar of the
/// others. `measures` holds one measure per slot or a single shared one and
/// must be log-concave and unconditional.
pub fn unconditionalize(
    bodies: &BodyTuple,
    measures: &[ReferenceMeasure],
    alpha: &[f64],
    max_rounds: usize,
) -> Result<(BodyTuple, UnconditionalReport)> {
    let nn = bodies.len();
    if measures.len() != 1 && measures.len() != nn {
        return Err(Error::DimensionMismatch { expected: nn, got: measures.len() });
    }
    let m = |i: usize| if measures.len() == 1 { &measures[0] } else { &measures[i] };
    for i in 0..nn {
        if !(m(i).is_log_concave() && m(i).is_unconditional()) {
            return Err(Error::Hypothesis(format!("measure of slot {i} is not declared log-concave and unconditional")));
        }
        let check = m(i).verify(HYPOTHESIS_SAMPLES, HYPOTHESIS_SEED);
        if !check.ok {
            return Err(Error::Hypothesis(format!("measure of slot {i} fails its declared properties: {check:?}")));
        }
    }
    let n = bodies.body(0).dim();
    for j in 0..n {
        for i in 0..nn - 1 {
            verify_cost(bodies, j, i, nn - 1)?;
        }
    }
    check_bodies(bodies)?;
    let measures_of = |t: &BodyTuple| -> Result<Vec<f64>> { (0..nn).map(|i| t.body(i).measure(m(i))).collect() };
    let all: Vec<ReferenceMeasure> = (0..nn).map(|i| m(i).clone()).collect();

    let mut report = UnconditionalReport {
        steps: Vec::new(),
        values: vec![bs_set_value(bodies, alpha, &all)?],
        measures: vec![measures_of(bodies)?],
        rounds: 0,
        residual: residual(bodies),
    };
    let last = c_polar_component(bodies, nn - 1)?.body;
    let mut cur = bodies.with_body(nn - 1, last)?;
    report.values.push(bs_set_value(&cur, alpha, &all)?);
    report.measures.push(measures_of(&cur)?);
    report.residual = residual(&cur);
    while report.residual > UNCONDITIONAL_TOL {
        if report.rounds == max_rounds {
            return Err(Error::NonConvergence { iterations: max_rounds, residual: report.residual });
        }
        for i in 0..nn - 1 {
            for j in 0..n {
                let (next, step) = jii_symmetrize(&cur, j, i, nn - 1, m(i), m(nn - 1))?;
                report.steps.push(step);
                cur = next;
            }
        }
        report.rounds += 1;
        report.values.push(bs_set_value(&cur, alpha, &all)?);
        report.measures.push(measures_of(&cur)?);
        report.residual = residual(&cur);
    }
    Ok((cur, report))
}
