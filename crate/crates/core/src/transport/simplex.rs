//! Revised simplex for `max obj.x` s.t. `A x = b`, `x >= 0`, where every
//! column of `A` is a 0/1 vector given by its row indices.

use crate::{Error, Result};

pub(crate) struct LpSolution {
    /// Nonzero basic variables `(column, value)`.
    pub x: Vec<(usize, f64)>,
    /// Dual values `u` with `u . A_j >= obj_j` for every column.
    pub duals: Vec<f64>,
    pub objective: f64,
}

const REFACTOR_EVERY: usize = 100;
const DEGENERATE_STREAK: usize = 50;

struct State<'a> {
    cols: &'a [Vec<usize>],
    rhs: &'a [f64],
    m: usize,
    /// Basis heads: `< cols.len()` real columns, otherwise artificial `cols.len() + row`.
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    in_basis: Vec<bool>,
    pivots: usize,
}

impl<'a> State<'a> {
    fn col_entries(&self, j: usize) -> Vec<usize> {
        if j < self.cols.len() {
            self.cols[j].clone()
        } else {
            vec![j - self.cols.len()]
        }
    }

    /// `B^-1 A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut d = vec![0.0; m];
        for r in self.col_entries(j) {
            for (i, di) in d.iter_mut().enumerate() {
                *di += self.binv[i * m + r];
            }
        }
        d
    }

    /// `y = c_B^T B^-1`.
    fn btran(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &h) in self.basis.iter().enumerate() {
            let c = cost(h);
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yr, b) in y.iter_mut().zip(row) {
                    *yr += c * b;
                }
            }
        }
        y
    }

    fn pivot(&mut self, l: usize, j: usize, d: &[f64]) {
        let m = self.m;
        let theta = self.xb[l] / d[l];
        for (i, (x, di)) in self.xb.iter_mut().zip(d).enumerate().take(m) {
            if i != l {
                *x -= theta * di;
                if x.abs() < 1e-15 {
                    *x = 0.0;
                }
            }
        }
        self.xb[l] = theta;
        let piv = d[l];
        let (head, rest) = self.binv.split_at_mut(l * m);
        let (lrow, tail) = rest.split_at_mut(m);
        for v in lrow.iter_mut() {
            *v /= piv;
        }
        for (i, row) in head.chunks_mut(m).chain(tail.chunks_mut(m)).enumerate() {
            let ii = if i < l { i } else { i + 1 };
            let f = d[ii];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(lrow.iter()) {
                    *a -= f * b;
                }
            }
        }
        let old = self.basis[l];
        if old < self.cols.len() {
            self.in_basis[old] = false;
        }
        self.basis[l] = j;
        if j < self.cols.len() {
            self.in_basis[j] = true;
        }
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        }
    }

    /// Recomputes `B^-1` by Gauss-Jordan elimination and `x_B = B^-1 b`.
    fn refactor(&mut self) {
        let m = self.m;
        let mut a = vec![0.0f64; m * m];
        for (k, &h) in self.basis.iter().enumerate() {
            for r in self.col_entries(h) {
                a[r * m + k] = 1.0;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| a[x * m + c].abs().total_cmp(&a[y * m + c].abs())).expect("nonempty");
            if a[p * m + c].abs() < 1e-12 {
                return; // keep the product-form inverse
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(self.rhs).map(|(x, y)| x * y).sum();
            self.xb[i] = if v.abs() < 1e-15 { 0.0 } else { v };
        }
    }

    /// Minimizes `cost` over the current phase. Artificial columns never enter.
    fn optimize(&mut self, cost: &dyn Fn(usize) -> f64, scale: f64) -> Result<()> {
        let n = self.cols.len();
        let tol = 1e-11 * (1.0 + scale);
        let mut streak = 0usize;
        let cap = 200 * (self.m + n) + 10_000;
        for _ in 0..cap {
            let y = self.btran(cost);
            let reduced = |j: usize| cost(j) - self.cols[j].iter().map(|&r| y[r]).sum::<f64>();
            let entering = if streak > DEGENERATE_STREAK {
                (0..n).find(|&j| !self.in_basis[j] && reduced(j) < -tol)
            } else {
                let mut best = (-tol, None);
                for j in 0..n {
                    if !self.in_basis[j] {
                        let r = reduced(j);
                        if r < best.0 {
                            best = (r, Some(j));
                        }
                    }
                }
                best.1
            };
            let Some(j) = entering else {
                return Ok(());
            };
            let d = self.ftran(j);
            let mut leave: Option<(f64, usize)> = None;
            for (i, &di) in d.iter().enumerate() {
                if di > 1e-11 {
                    let t = self.xb[i].max(0.0) / di;
                    let better = match leave {
                        None => true,
                        Some((bt, bl)) => t < bt - 1e-15 || (t <= bt + 1e-15 && self.basis[i] < self.basis[bl]),
                    };
                    if better {
                        leave = Some((t, i));
                    }
                }
            }
            let Some((theta, l)) = leave else {
                return Err(Error::Infeasible("transport program is unbounded".into()));
            };
            streak = if theta <= 1e-14 { streak + 1 } else { 0 };
            self.pivot(l, j, &d);
        }
        Err(Error::NonConvergence { iterations: cap, residual: f64::NAN })
    }
}

pub(crate) fn simplex_max(cols: &[Vec<usize>], obj: &[f64], rhs: &[f64]) -> Result<LpSolution> {
    let m = rhs.len();
    let n = cols.len();
    if rhs.iter().any(|b| *b < 0.0) {
        return Err(Error::InvalidInput("right-hand side must be nonnegative".into()));
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let mut st = State {
        cols,
        rhs,
        m,
        basis: (n..n + m).collect(),
        binv,
        xb: rhs.to_vec(),
        in_basis: vec![false; n],
        pivots: 0,
    };
    // phase I: minimize the sum of artificials
    st.optimize(&|j| if j >= n { 1.0 } else { 0.0 }, 1.0)?;
    st.refactor();
    let infeas: f64 = st.basis.iter().zip(&st.xb).filter(|(h, _)| **h >= n).map(|(_, x)| *x).sum();
    let total: f64 = rhs.iter().sum();
    if infeas > 1e-9 * (1.0 + total) {
        return Err(Error::Infeasible(format!("marginals are inconsistent (phase I residual {infeas:.3e})")));
    }
    // drive zero-level artificials out of the basis where possible
    for l in 0..m {
        if st.basis[l] < n {
            continue;
        }
        let m_ = st.m;
        let row: Vec<f64> = st.binv[l * m_..(l + 1) * m_].to_vec();
        if let Some(j) = (0..n).find(|&j| !st.in_basis[j] && cols[j].iter().map(|&r| row[r]).sum::<f64>().abs() > 1e-9) {
            st.xb[l] = 0.0;
            let d = st.ftran(j);
            st.pivot(l, j, &d);
        }
    }
    let scale = obj.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let cost = |j: usize| if j < n { -obj[j] } else { 0.0 };
    st.optimize(&cost, scale)?;
    st.refactor();
    let y = st.btran(&cost);
    let duals: Vec<f64> = y.iter().map(|v| -v).collect();
    let x: Vec<(usize, f64)> =
        st.basis.iter().zip(&st.xb).filter(|(h, v)| **h < n && **v > 0.0).map(|(h, v)| (*h, *v)).collect();
    let objective = x.iter().map(|(j, v)| obj[*j] * v).sum();
    Ok(LpSolution { x, duals, objective })
}
