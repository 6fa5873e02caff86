//! Grids, symmetric star bodies, reference measures and quadrature.

mod body;
mod directions;
mod grid;
mod measure;
pub mod serde_ext;

pub use body::{steiner_symmetrize, StarBody, SupportOracle};
pub use directions::DirectionGrid;
pub use grid::{integrate_exp, CartesianGrid, GridFunction, IntegralReport};
pub use measure::{MeasureCheck, MeasureKind, ReferenceMeasure};

/// Minkowski functional of `body` at `point`.
pub fn gauge_eval(body: &StarBody, point: &[f64]) -> crate::Result<f64> {
    body.gauge(point)
}

/// Measure of a star body under `m`, by polar quadrature.
pub fn measure_of_body(body: &StarBody, m: &ReferenceMeasure) -> crate::Result<f64> {
    body.measure(m)
}
