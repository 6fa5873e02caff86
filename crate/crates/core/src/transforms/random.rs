use rand::Rng;

use crate::geometry::{CartesianGrid, GridFunction};

/// Random even convex potential: `a |x|^2 + b |x|^4 / 4 + c |x|_Q`, where
/// `|x|_Q` is the Euclidean norm after a random diagonal stretch (n=2) and
/// the coefficients are drawn from moderate ranges so that c-transforms stay
/// attained inside a grid of half-width at least 4.
///
/// With `separable` the potential is `sum_j v(x_j)` for one random even
/// convex profile `v` instead.
pub fn random_even_convex<R: Rng>(grid: &CartesianGrid, rng: &mut R, separable: bool) -> GridFunction {
    let a = rng.gen_range(0.15..1.0);
    let b = rng.gen_range(0.0..0.3);
    let c = rng.gen_range(0.0..0.8);
    if separable || grid.dim == 1 {
        return GridFunction::separable_from_profile(grid, |t| a * t * t + b * t.powi(4) / 4.0 + c * t);
    }
    let s = rng.gen_range(0.5..2.0);
    GridFunction::from_fn(grid, move |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let q = (x[0] * x[0] * s + x[1] * x[1] / s).sqrt();
        a * r2 + b * r2 * r2 / 4.0 + c * q
    })
}
