use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measure::ReferenceMeasure;
use crate::{par, Error, Result};

/// Uniform symmetric grid `[-L, L]^n` with an odd number of points per axis.
///
/// Node `k` on an axis sits at `(k - (G-1)/2) * h`, so negation maps node `k`
/// to node `G-1-k` exactly. Flat indices are row-major (axis 0 slowest), which
/// makes the reflection of flat index `f` equal to `len - 1 - f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl CartesianGrid {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension {dim} not in 1..=3")));
        }
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("grid points {points} must be odd and >= 3")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("half width {half_width} must be positive")));
        }
        Ok(Self { dim, half_width, points })
    }

    /// Default resolution: `L=8, G=321` for n=1 and `L=6, G=121` for n=2.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Self { dim, half_width: 8.0, points: 321 },
            2 => Self { dim, half_width: 6.0, points: 121 },
            _ => Self { dim, half_width: 4.0, points: 41 },
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn center(&self) -> usize {
        (self.points - 1) / 2
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of axis node `k`.
    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.coord(k)).collect()
    }

    pub fn reflect(&self, flat: usize) -> usize {
        self.len() - 1 - flat
    }

    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for j in (0..self.dim).rev() {
            out[j] = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.points + k)
    }

    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; 3];
        self.unflatten(flat, &mut idx[..self.dim]);
        for j in 0..self.dim {
            out[j] = self.coord(idx[j]);
        }
    }

    pub fn point_vec(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        self.point(flat, &mut p);
        p
    }

    /// Index of the origin node.
    pub fn origin(&self) -> usize {
        self.len() / 2
    }

    /// Trapezoid weight of an axis node.
    pub fn axis_weight(&self, k: usize) -> f64 {
        let h = self.spacing();
        if k == 0 || k + 1 == self.points {
            0.5 * h
        } else {
            h
        }
    }

    pub fn weight(&self, flat: usize) -> f64 {
        let mut idx = [0usize; 3];
        self.unflatten(flat, &mut idx[..self.dim]);
        idx[..self.dim].iter().map(|&k| self.axis_weight(k)).product()
    }

    pub fn on_boundary(&self, flat: usize) -> bool {
        let mut idx = [0usize; 3];
        self.unflatten(flat, &mut idx[..self.dim]);
        idx[..self.dim].iter().any(|&k| k == 0 || k + 1 == self.points)
    }

    /// Nearest axis node to coordinate `x`, clamped to the grid.
    pub fn nearest_axis(&self, x: f64) -> usize {
        let k = (x / self.spacing() + self.center() as f64).round();
        k.clamp(0.0, (self.points - 1) as f64) as usize
    }
}

/// An even function on a [`CartesianGrid`] with `+inf` marking points outside
/// its effective domain.
///
/// A function may also carry a coordinate-separable representation
/// `V(x) = sum_j a_j(x_j)`; transforms use it to split n-dimensional problems
/// into independent one-dimensional ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: CartesianGrid,
    #[serde(serialize_with = "super::serde_ext::serialize_vec", deserialize_with = "super::serde_ext::deserialize_vec")]
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axes: Option<Vec<Vec<f64>>>,
}

fn same_ext(a: f64, b: f64) -> bool {
    a == b || (a.is_infinite() && b.is_infinite() && a.signum() == b.signum())
}

impl GridFunction {
    /// Samples `f`, evaluating only at one representative of each pair
    /// `{x, -x}` so the result is exactly even.
    pub fn from_fn<F>(grid: &CartesianGrid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let len = grid.len();
        let half: Vec<f64> = par::map_range(len / 2 + 1, |flat| {
            let mut p = [0.0; 3];
            grid.point(flat, &mut p[..grid.dim]);
            f(&p[..grid.dim])
        });
        let values = (0..len).map(|flat| half[flat.min(len - 1 - flat)]).collect();
        Self { grid: grid.clone(), values, axes: None }
    }

    /// Wraps explicit node values; they must already be exactly even.
    pub fn from_values(grid: &CartesianGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidInput("grid function values must be finite or +inf".into()));
        }
        for f in 0..values.len() / 2 {
            if !same_ext(values[f], values[values.len() - 1 - f]) {
                return Err(Error::InvalidInput(format!(
                    "grid function is not even at node {f}: {} vs {}",
                    values[f],
                    values[values.len() - 1 - f]
                )));
            }
        }
        Ok(Self { grid: grid.clone(), values, axes: None })
    }

    /// Averages arbitrary values with their reflection (`+inf` wins).
    pub fn symmetrized(grid: &CartesianGrid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        let len = values.len();
        for f in 0..len / 2 {
            let g = len - 1 - f;
            let m = 0.5 * (values[f] + values[g]);
            values[f] = m;
            values[g] = m;
        }
        Self::from_values(grid, values)
    }

    /// Builds `V(x) = sum_j axes[j](x_j)`; every axis profile must be even.
    pub fn separable(grid: &CartesianGrid, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, got: axes.len() });
        }
        for a in &axes {
            if a.len() != grid.points {
                return Err(Error::DimensionMismatch { expected: grid.points, got: a.len() });
            }
            for k in 0..a.len() / 2 {
                if !same_ext(a[k], a[a.len() - 1 - k]) {
                    return Err(Error::InvalidInput("separable axis profile is not even".into()));
                }
            }
        }
        let mut idx = [0usize; 3];
        let values = (0..grid.len())
            .map(|flat| {
                grid.unflatten(flat, &mut idx[..grid.dim]);
                (0..grid.dim).map(|j| axes[j][idx[j]]).sum()
            })
            .collect();
        Ok(Self { grid: grid.clone(), values, axes: Some(axes) })
    }

    /// Separable function with the same profile on every axis.
    pub fn separable_from_profile<F: Fn(f64) -> f64>(grid: &CartesianGrid, f: F) -> Self {
        let prof: Vec<f64> = (0..grid.points).map(|k| f(grid.coord(k).abs())).collect();
        Self::separable(grid, vec![prof; grid.dim]).expect("profile is even by construction")
    }

    /// Indicator-style potential: 0 where `inside` holds, `+inf` elsewhere.
    pub fn indicator<F>(grid: &CartesianGrid, inside: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Sync + Send,
    {
        Self::from_fn(grid, |x| if inside(x) { 0.0 } else { f64::INFINITY })
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }

    pub fn is_separable(&self) -> bool {
        self.axes.is_some()
    }

    /// Returns the function plus a constant (separable structure kept).
    pub fn shifted(&self, delta: f64) -> Self {
        let values = self.values.iter().map(|v| v + delta).collect();
        let axes = self.axes.as_ref().map(|axes| {
            let mut axes = axes.clone();
            for v in axes[0].iter_mut() {
                *v += delta;
            }
            axes
        });
        Self { grid: self.grid.clone(), values, axes }
    }

    /// Largest finite absolute value.
    pub fn sup_finite(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance over nodes finite in both; differing `+inf` patterns
    /// count as infinite distance.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| match (a.is_finite(), b.is_finite()) {
                (true, true) => (a - b).abs(),
                (false, false) => 0.0,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Multilinear interpolation at an arbitrary point; `+inf` outside the box
    /// or when any surrounding node is `+inf`.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for j in 0..g.dim {
            let s = x[j] / h + g.center() as f64;
            if s < -1e-12 || s > (g.points - 1) as f64 + 1e-12 {
                return f64::INFINITY;
            }
            let s = s.clamp(0.0, (g.points - 1) as f64);
            let k = (s.floor() as usize).min(g.points - 2);
            base[j] = k;
            frac[j] = s - k as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << g.dim) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for j in 0..g.dim {
                let bit = (corner >> j) & 1;
                idx[j] = base[j] + bit;
                w *= if bit == 1 { frac[j] } else { 1.0 - frac[j] };
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[g.flatten(&idx[..g.dim])];
            if !v.is_finite() {
                return f64::INFINITY;
            }
            acc += w * v;
        }
        acc
    }

    /// Largest sampled violation of midpoint convexity over node pairs whose
    /// midpoint is also a node. Pairs involving `+inf` are skipped when the
    /// midpoint is finite (convexity is then trivially satisfied).
    pub fn midpoint_convexity_violation(&self, samples: usize, seed: u64) -> f64 {
        let g = &self.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        let mut a = [0usize; 3];
        let mut b = [0usize; 3];
        let mut m = [0usize; 3];
        for _ in 0..samples {
            for j in 0..g.dim {
                a[j] = rng.gen_range(0..g.points);
                let parity = a[j] % 2;
                let mut k = rng.gen_range(0..g.points);
                if k % 2 != parity {
                    k = if k + 1 < g.points { k + 1 } else { k - 1 };
                }
                b[j] = k;
                m[j] = (a[j] + b[j]) / 2;
            }
            let va = self.values[g.flatten(&a[..g.dim])];
            let vb = self.values[g.flatten(&b[..g.dim])];
            let vm = self.values[g.flatten(&m[..g.dim])];
            if !(va.is_finite() && vb.is_finite()) {
                continue;
            }
            if !vm.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(vm - 0.5 * (va + vb));
        }
        worst
    }
}

/// Result of [`integrate_exp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    /// Mass carried by the outermost grid shell relative to the total.
    pub shell_fraction: f64,
    /// Set when `shell_fraction > 1e-3`.
    pub truncation_warning: bool,
}

/// Trapezoid quadrature of `exp(-alpha V) rho` over the grid.
pub fn integrate_exp(v: &GridFunction, alpha: f64, m: &ReferenceMeasure) -> Result<IntegralReport> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} must be positive")));
    }
    let g = v.grid();
    if m.dim() != g.dim {
        return Err(Error::DimensionMismatch { expected: g.dim, got: m.dim() });
    }
    let slab = g.len() / g.points;
    let parts: Vec<(f64, f64)> = par::map_range(g.points, |k0| {
        let mut p = [0.0; 3];
        let (mut total, mut shell) = (0.0, 0.0);
        for flat in k0 * slab..(k0 + 1) * slab {
            let val = v.value(flat);
            if val == f64::INFINITY {
                continue;
            }
            g.point(flat, &mut p[..g.dim]);
            let term = g.weight(flat) * (-alpha * val).exp() * m.density(&p[..g.dim]);
            total += term;
            if g.on_boundary(flat) {
                shell += term;
            }
        }
        (total, shell)
    });
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let shell: f64 = parts.iter().map(|p| p.1).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateIntegral { component: 0 });
    }
    let shell_fraction = shell / total;
    Ok(IntegralReport { value: total, shell_fraction, truncation_warning: shell_fraction > 1e-3 })
}
