use rand::Rng;
use serde::{Deserialize, Serialize};

use super::directions::DirectionGrid;
use super::measure::{MeasureKind, ReferenceMeasure};
use crate::{Error, Result};

/// Symmetric star body given by its radial function on a [`DirectionGrid`].
///
/// In the plane the body is the polygon through the boundary points
/// `r_k theta_k`, so the gauge is exactly 1-homogeneous, exactly convex for
/// convex data, and sets built from grid samples of a convex body are inscribed
/// in that body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarBody {
    grid: DirectionGrid,
    radial: Vec<f64>,
    convex: bool,
}

/// Gauss-Legendre nodes/weights on [-1, 1] used per angular sector.
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl StarBody {
    /// Wraps radial values. Values must be positive and finite; symmetry is
    /// checked to 1e-9 relative and then made exact by averaging.
    pub fn from_radial(grid: &DirectionGrid, mut radial: Vec<f64>) -> Result<Self> {
        if radial.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: radial.len() });
        }
        if radial.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidInput("radial values must be positive and finite".into()));
        }
        for k in 0..grid.len() / 2 {
            let m = grid.neg(k);
            let (a, b) = (radial[k], radial[m]);
            if (a - b).abs() > 1e-9 * a.max(b) {
                return Err(Error::InvalidInput(format!("body is not symmetric at direction {k}: {a} vs {b}")));
            }
            let avg = 0.5 * (a + b);
            radial[k] = avg;
            radial[m] = avg;
        }
        let mut body = Self { grid: grid.clone(), radial, convex: true };
        body.convex = body.polygon_is_convex();
        Ok(body)
    }

    /// Body `{x : g(x) <= 1}` for an even 1-homogeneous gauge `g`.
    pub fn from_gauge<F: Fn(&[f64]) -> f64>(grid: &DirectionGrid, g: F) -> Result<Self> {
        let half = grid.len() / 2;
        let mut radial = vec![0.0; grid.len()];
        for k in 0..half {
            let r = 1.0 / g(grid.dir(k));
            radial[k] = r;
            radial[grid.neg(k)] = r;
        }
        Self::from_radial(grid, radial)
    }

    /// The unit ball of the l_p norm (`p = f64::INFINITY` gives the cube).
    pub fn lp_ball(grid: &DirectionGrid, p: f64) -> Result<Self> {
        Self::from_gauge(grid, |x| {
            if p.is_infinite() {
                x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            } else {
                x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
            }
        })
    }

    /// Symmetric interval `[-a, a]` (n=1).
    pub fn interval(a: f64) -> Result<Self> {
        Self::from_radial(&DirectionGrid::default_for(1), vec![a, a])
    }

    /// Convex hull of `points` and their negations, sampled on the grid.
    pub fn from_points_hull(grid: &DirectionGrid, points: &[[f64; 2]]) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: grid.dim() });
        }
        let mut all: Vec<[f64; 2]> = points.iter().flat_map(|p| [*p, [-p[0], -p[1]]]).collect();
        let hull = convex_hull(&mut all);
        Self::from_convex_polygon(grid, &hull)
    }

    /// Samples the radial function of a convex polygon (counter-clockwise,
    /// origin in the interior) at the grid directions.
    pub fn from_convex_polygon(grid: &DirectionGrid, poly: &[[f64; 2]]) -> Result<Self> {
        let edges = polygon_edges(poly)?;
        let half = grid.len() / 2;
        let mut radial = vec![0.0; grid.len()];
        for k in 0..half {
            let u = grid.dir(k);
            let r_pos = ray_exit(&edges, [u[0], u[1]]);
            let r_neg = ray_exit(&edges, [-u[0], -u[1]]);
            if (r_pos - r_neg).abs() > 1e-9 * r_pos.max(r_neg) {
                return Err(Error::InvalidInput("polygon is not centrally symmetric".into()));
            }
            let r = 0.5 * (r_pos + r_neg);
            radial[k] = r;
            radial[grid.neg(k)] = r;
        }
        Self::from_radial(grid, radial)
    }

    /// Uniformly random symmetric convex polygon: hull of `m` random points
    /// (angles in `[0, pi)`, radii in `[rmin, rmax]`) and their negations.
    pub fn random_polygon<R: Rng>(grid: &DirectionGrid, rng: &mut R, m: usize, rmin: f64, rmax: f64) -> Result<Self> {
        let pts: Vec<[f64; 2]> = (0..m.max(2))
            .map(|_| {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                let r: f64 = rng.gen_range(rmin..rmax);
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        Self::from_points_hull(grid, &pts)
    }

    pub fn grid(&self) -> &DirectionGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn radial(&self) -> &[f64] {
        &self.radial
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    /// Boundary point in grid direction `k` (n=2).
    pub fn vertex(&self, k: usize) -> [f64; 2] {
        let d = self.grid.dir(k % self.grid.len());
        let r = self.radial[k % self.grid.len()];
        [r * d[0], r * d[1]]
    }

    pub fn vertices(&self) -> Vec<[f64; 2]> {
        (0..self.grid.len()).map(|k| self.vertex(k)).collect()
    }

    fn polygon_is_convex(&self) -> bool {
        if self.dim() == 1 {
            return true;
        }
        let k = self.grid.len();
        let scale = self.radial.iter().fold(0.0f64, |m, r| m.max(*r)).powi(2);
        (0..k).all(|i| {
            let (a, b, c) = (self.vertex(i), self.vertex(i + 1), self.vertex(i + 2));
            cross([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]) >= -1e-10 * scale
        })
    }

    /// Minkowski functional. In the plane it is the gauge of the polygon
    /// through the boundary samples, which is linear on each angular sector.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.gauge_unchecked(x))
    }

    pub(crate) fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        if self.dim() == 1 {
            let k = if x[0] >= 0.0 { 0 } else { 1 };
            return x[0].abs() / self.radial[k];
        }
        if x[0] == 0.0 && x[1] == 0.0 {
            return 0.0;
        }
        let k = self.grid.sector(x[0], x[1]);
        let (a, b) = (self.vertex(k), self.vertex(k + 1));
        let d = cross(a, b);
        cross([x[0], x[1]], [b[0] - a[0], b[1] - a[1]]) / d
    }

    /// Radius of the body along the unit vector of angle `phi` (n=2).
    pub fn radius_at_angle(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        1.0 / self.gauge_unchecked(&[c, s])
    }

    /// `m(K)` by polar quadrature.
    pub fn measure(&self, m: &ReferenceMeasure) -> Result<f64> {
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: m.dim() });
        }
        if self.dim() == 1 {
            return Ok((0..2).map(|k| m.radial_integral(self.grid.dir(k), self.radial[k])).sum());
        }
        let kk = self.grid.len();
        let step = self.grid.step();
        if matches!(m.kind(), MeasureKind::Lebesgue) {
            let s = step.sin();
            return Ok((0..kk).map(|k| 0.5 * self.radial[k] * self.radial[(k + 1) % kk] * s).sum());
        }
        let mut total = 0.0;
        for k in 0..kk {
            let (a, b) = (self.vertex(k), self.vertex(k + 1));
            let d = cross(a, b);
            let e = [b[0] - a[0], b[1] - a[1]];
            let th0 = self.grid.angle(k);
            for (node, w) in GL4 {
                let phi = th0 + 0.5 * step * (node + 1.0);
                let u = [phi.cos(), phi.sin()];
                let radius = d / cross(u, e);
                total += 0.5 * step * w * m.radial_integral(&u, radius);
            }
        }
        Ok(total)
    }

    /// Largest relative change of the radial function under a coordinate sign
    /// flip; zero for unconditional bodies.
    pub fn unconditional_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for axis in 0..self.dim() {
            for k in 0..self.grid.len() {
                let f = self.grid.flip(k, axis);
                worst = worst.max((self.radial[k] - self.radial[f]).abs() / self.radial[k]);
            }
        }
        worst
    }

    /// Chord `[lo, hi]` of the body along coordinate `axis` at the given value
    /// of the other coordinate (n=2); `None` if the line misses the body.
    pub fn chord(&self, axis: usize, height: f64) -> Option<(f64, f64)> {
        chord_of(&self.vertices(), axis, height)
    }

    /// Support function `h(w) = max_{x in K} <x, w>` (brute force over
    /// boundary samples; see [`SupportOracle`] for repeated queries).
    pub fn support(&self, w: &[f64]) -> f64 {
        if self.dim() == 1 {
            return self.radial[0] * w[0].abs();
        }
        self.vertices().iter().map(|p| p[0] * w[0] + p[1] * w[1]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Chord of a polygon (vertex list) along `axis` at `height` of the other axis.
fn chord_of(poly: &[[f64; 2]], axis: usize, height: f64) -> Option<(f64, f64)> {
    let o = 1 - axis;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (ya, yb) = (a[o], b[o]);
        if (ya - height) * (yb - height) > 0.0 {
            continue;
        }
        if ya == yb {
            if ya == height {
                lo = lo.min(a[axis]).min(b[axis]);
                hi = hi.max(a[axis]).max(b[axis]);
            }
            continue;
        }
        let t = ((height - ya) / (yb - ya)).clamp(0.0, 1.0);
        let x = a[axis] + t * (b[axis] - a[axis]);
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (lo <= hi).then_some((lo, hi))
}

/// Edge list `(outward normal, offset)` of a counter-clockwise convex polygon
/// with the origin in its interior.
fn polygon_edges(poly: &[[f64; 2]]) -> Result<Vec<([f64; 2], f64)>> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::InvalidInput("polygon needs at least three vertices".into()));
    }
    let scale = poly.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let e = [b[0] - a[0], b[1] - a[1]];
        if e[0].abs().max(e[1].abs()) <= 1e-14 * scale {
            continue;
        }
        let nrm = [e[1], -e[0]];
        let off = nrm[0] * a[0] + nrm[1] * a[1];
        if !(off > 0.0) {
            return Err(Error::InvalidInput("polygon must be counter-clockwise with the origin inside".into()));
        }
        edges.push((nrm, off));
    }
    Ok(edges)
}

fn ray_exit(edges: &[([f64; 2], f64)], u: [f64; 2]) -> f64 {
    edges
        .iter()
        .filter_map(|(n, off)| {
            let d = n[0] * u[0] + n[1] * u[1];
            (d > 0.0).then(|| off / d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Andrew's monotone chain; returns the strict hull counter-clockwise.
pub(crate) fn convex_hull(pts: &mut [[f64; 2]]) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| cross([a[0] - o[0], a[1] - o[1]], [b[0] - o[0], b[1] - o[1]]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter() {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Support-function oracle for a convex planar body with logarithmic-time
/// queries, built from the strict hull of the boundary samples.
#[derive(Clone, Debug)]
pub struct SupportOracle {
    hull: Vec<[f64; 2]>,
    normals: Vec<f64>,
    start: usize,
}

impl SupportOracle {
    pub fn new(body: &StarBody) -> Self {
        let mut pts = body.vertices();
        let hull = convex_hull(&mut pts);
        let m = hull.len();
        let normals: Vec<f64> = (0..m)
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % m]);
                let mut ang = (-(b[0] - a[0])).atan2(b[1] - a[1]);
                if ang < 0.0 {
                    ang += 2.0 * std::f64::consts::PI;
                }
                ang
            })
            .collect();
        // Near-collinear samples give normals that tie up to rounding, so the
        // smallest one need not open the sorted run. The wrap is the largest drop.
        let start = (0..m)
            .max_by(|&i, &j| {
                let drop = |k: usize| normals[(k + m - 1) % m] - normals[k];
                drop(i).total_cmp(&drop(j))
            })
            .unwrap_or(0);
        Self { hull, normals, start }
    }

    pub fn support(&self, w: [f64; 2]) -> f64 {
        let m = self.hull.len();
        let mut ang = w[1].atan2(w[0]);
        if ang < 0.0 {
            ang += 2.0 * std::f64::consts::PI;
        }
        // Normal angles increase along the rotated sequence start, start+1, ...
        let (mut lo, mut hi) = (0usize, m);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.normals[(self.start + mid) % m] < ang {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let idx = (self.start + lo) % m;
        let dot = |p: [f64; 2]| p[0] * w[0] + p[1] * w[1];
        let mut best = dot(self.hull[idx]);
        for off in [1, m - 1] {
            best = best.max(dot(self.hull[(idx + off) % m]));
        }
        best
    }
}

/// Steiner symmetral of a convex body along coordinate `axis`: each chord
/// parallel to `e_axis` is replaced by the centered chord of the same length.
///
/// The symmetral of a polygon is a polygon whose vertices lie at the heights of
/// the input vertices, so it is computed exactly and then re-sampled on the
/// direction grid.
pub fn steiner_symmetrize(body: &StarBody, axis: usize) -> Result<StarBody> {
    if axis >= body.dim() {
        return Err(Error::InvalidInput(format!("axis {axis} out of range")));
    }
    if !body.is_convex() {
        return Err(Error::Hypothesis("Steiner symmetrization needs a convex body".into()));
    }
    if body.dim() == 1 {
        return Ok(body.clone());
    }
    let o = 1 - axis;
    let poly = body.vertices();
    let mut heights: Vec<f64> = poly.iter().map(|p| p[o]).collect();
    heights.sort_by(f64::total_cmp);
    heights.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    // Make the height set symmetric so the output is exactly symmetric.
    let hmax = heights.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let mut sym: Vec<f64> = heights.iter().filter(|h| **h > 0.0).copied().collect();
    sym.extend(heights.iter().filter(|h| **h < 0.0).map(|h| -h));
    sym.sort_by(f64::total_cmp);
    sym.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    let mut levels: Vec<f64> = sym.iter().rev().map(|h| -h).collect();
    levels.push(0.0);
    levels.extend(sym.iter().copied());
    let half_widths: Vec<f64> = levels
        .iter()
        .map(|&y| {
            let yy = y.clamp(-hmax, hmax);
            chord_of(&poly, axis, yy).map_or(0.0, |(lo, hi)| 0.5 * (hi - lo))
        })
        .collect();
    let nl = levels.len();
    // Heights are symmetric; average mirrored widths to remove rounding.
    let hw: Vec<f64> = (0..nl).map(|i| 0.5 * (half_widths[i] + half_widths[nl - 1 - i])).collect();
    let mk = |along: f64, y: f64| -> [f64; 2] {
        let mut p = [0.0; 2];
        p[axis] = along;
        p[o] = y;
        p
    };
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(2 * nl);
    for i in 0..nl {
        out.push(mk(hw[i], levels[i]));
    }
    for i in (0..nl).rev() {
        out.push(mk(-hw[i], levels[i]));
    }
    let hull = convex_hull(&mut out);
    StarBody::from_convex_polygon(body.grid(), &hull)
}
