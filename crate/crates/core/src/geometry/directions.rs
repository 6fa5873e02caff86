use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Equally spaced unit directions, closed under negation.
///
/// For n=2 direction `k` has angle `2 pi k / K`; for n=1 the grid is `{+1, -1}`,
/// which is the same formula with `K = 2` restricted to the first coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectionGridSpec", into = "DirectionGridSpec")]
pub struct DirectionGrid {
    dim: usize,
    count: usize,
    dirs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct DirectionGridSpec {
    dim: usize,
    count: usize,
}

impl TryFrom<DirectionGridSpec> for DirectionGrid {
    type Error = Error;
    fn try_from(s: DirectionGridSpec) -> Result<Self> {
        DirectionGrid::new(s.dim, s.count)
    }
}

impl From<DirectionGrid> for DirectionGridSpec {
    fn from(g: DirectionGrid) -> Self {
        DirectionGridSpec { dim: g.dim, count: g.count }
    }
}

/// Default number of directions on the circle.
pub const DEFAULT_CIRCLE_DIRECTIONS: usize = 360;

impl DirectionGrid {
    pub fn new(dim: usize, count: usize) -> Result<Self> {
        match dim {
            1 if count == 2 => Ok(Self { dim, count, dirs: vec![1.0, -1.0] }),
            1 => Err(Error::InvalidInput("the 0-sphere has exactly two directions".into())),
            2 if count >= 8 && count.is_multiple_of(4) => {
                let mut dirs = Vec::with_capacity(2 * count);
                for k in 0..count {
                    let (s, c) = Self::angle_of(count, k).sin_cos();
                    dirs.push(c);
                    dirs.push(s);
                }
                // exact negation closure
                for k in count / 2..count {
                    let m = k - count / 2;
                    dirs[2 * k] = -dirs[2 * m];
                    dirs[2 * k + 1] = -dirs[2 * m + 1];
                }
                Ok(Self { dim, count, dirs })
            }
            2 => Err(Error::InvalidInput(format!("circle direction count {count} must be a multiple of 4, >= 8"))),
            _ => Err(Error::InvalidInput(format!("direction grids support n in {{1,2}}, got {dim}"))),
        }
    }

    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Self::new(1, 2).expect("valid"),
            _ => Self::new(2, DEFAULT_CIRCLE_DIRECTIONS).expect("valid"),
        }
    }

    fn angle_of(count: usize, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / count as f64
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dir(&self, k: usize) -> &[f64] {
        &self.dirs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn angle(&self, k: usize) -> f64 {
        Self::angle_of(self.count, k)
    }

    /// Angular spacing (n=2).
    pub fn step(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.count as f64
    }

    pub fn neg(&self, k: usize) -> usize {
        (k + self.count / 2) % self.count
    }

    /// Quadrature weight; weights sum to 2 (n=1) or 2 pi (n=2).
    pub fn weight(&self, _k: usize) -> f64 {
        if self.dim == 1 {
            1.0
        } else {
            self.step()
        }
    }

    /// Index of the direction obtained by flipping the sign of coordinate `axis`.
    pub fn flip(&self, k: usize, axis: usize) -> usize {
        if self.dim == 1 {
            return self.neg(k);
        }
        match axis {
            0 => (self.count / 2 + self.count - k) % self.count,
            _ => (self.count - k) % self.count,
        }
    }

    /// Sector containing the angle of `(x, y)`: the index `k` with
    /// `angle in [theta_k, theta_{k+1})`.
    pub fn sector(&self, x: f64, y: f64) -> usize {
        let mut a = y.atan2(x);
        if a < 0.0 {
            a += 2.0 * std::f64::consts::PI;
        }
        ((a / self.step()).floor() as usize).min(self.count - 1)
    }

    /// Nearest grid direction to the angle of `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> usize {
        let mut a = y.atan2(x);
        if a < 0.0 {
            a += 2.0 * std::f64::consts::PI;
        }
        ((a / self.step()).round() as usize) % self.count
    }
}
