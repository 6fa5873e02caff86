use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::{Error, Result};

/// Built-in density families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureKind {
    Lebesgue,
    /// Standard Gaussian `(2 pi)^{-n/2} exp(-|x|^2 / 2)`.
    Gaussian,
    /// `2^{-n} exp(-sum |x_j|)`.
    ExponentialProduct,
    /// `|x|^r`, homogeneous of degree `r`.
    Power { r: f64 },
    /// User-supplied density with declared flags (re-verified by sampling).
    CustomDensity,
}

type Density = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A reference measure `m = rho dx` on R^n.
#[derive(Clone)]
pub struct ReferenceMeasure {
    dim: usize,
    kind: MeasureKind,
    homogeneity: Option<f64>,
    log_concave: bool,
    unconditional: bool,
    custom: Option<Density>,
}

impl fmt::Debug for ReferenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceMeasure")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("homogeneity", &self.homogeneity)
            .field("log_concave", &self.log_concave)
            .field("unconditional", &self.unconditional)
            .finish()
    }
}

/// Outcome of re-verifying the declared flags of a measure by sampling.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureCheck {
    pub negative_density: bool,
    pub homogeneity_residual: f64,
    pub unconditional_residual: f64,
    pub log_concavity_violation: f64,
    pub ok: bool,
}

const RADIAL_STEPS: usize = 512;

impl ReferenceMeasure {
    pub fn new(dim: usize, kind: MeasureKind) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("measure dimension {dim} not in 1..=3")));
        }
        let (homogeneity, log_concave, unconditional) = match &kind {
            MeasureKind::Lebesgue => (Some(0.0), true, true),
            MeasureKind::Gaussian => (None, true, true),
            MeasureKind::ExponentialProduct => (None, true, true),
            MeasureKind::Power { r } => {
                if !(*r >= 0.0) {
                    return Err(Error::InvalidInput("power measure needs r >= 0".into()));
                }
                (Some(*r), *r == 0.0, true)
            }
            MeasureKind::CustomDensity => {
                return Err(Error::InvalidInput("use ReferenceMeasure::custom for custom densities".into()))
            }
        };
        Ok(Self { dim, kind, homogeneity, log_concave, unconditional, custom: None })
    }

    pub fn lebesgue(dim: usize) -> Self {
        Self::new(dim, MeasureKind::Lebesgue).expect("valid dimension")
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(dim, MeasureKind::Gaussian).expect("valid dimension")
    }

    /// Custom density with declared properties. Declarations are not trusted:
    /// call [`ReferenceMeasure::verify`] before relying on them.
    pub fn custom<F>(dim: usize, density: F, homogeneity: Option<f64>, log_concave: bool, unconditional: bool) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            kind: MeasureKind::CustomDensity,
            homogeneity,
            log_concave,
            unconditional,
            custom: Some(Arc::new(density)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn homogeneity(&self) -> Option<f64> {
        self.homogeneity
    }

    pub fn is_log_concave(&self) -> bool {
        self.log_concave
    }

    pub fn is_unconditional(&self) -> bool {
        self.unconditional
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        match &self.kind {
            MeasureKind::Lebesgue => 1.0,
            MeasureKind::Gaussian => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-0.5 * r2).exp() / (2.0 * std::f64::consts::PI).powf(0.5 * self.dim as f64)
            }
            MeasureKind::ExponentialProduct => {
                let s: f64 = x.iter().map(|v| v.abs()).sum();
                (-s).exp() / 2f64.powi(self.dim as i32)
            }
            MeasureKind::Power { r } => {
                if *r == 0.0 {
                    1.0
                } else {
                    x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(*r)
                }
            }
            MeasureKind::CustomDensity => (self.custom.as_ref().expect("custom density"))(x),
        }
    }

    /// `int_0^R rho(t u) t^{n-1} dt` for a unit vector `u`. Closed forms for the
    /// built-in families, a 512-step midpoint rule otherwise.
    pub fn radial_integral(&self, u: &[f64], radius: f64) -> f64 {
        let n = self.dim as i32;
        match &self.kind {
            MeasureKind::Lebesgue => radius.powi(n) / n as f64,
            MeasureKind::Power { r } => radius.powf(r + n as f64) / (r + n as f64),
            MeasureKind::Gaussian if n == 1 => 0.5 * erf(radius / std::f64::consts::SQRT_2),
            MeasureKind::Gaussian if n == 2 => (1.0 - (-0.5 * radius * radius).exp()) / (2.0 * std::f64::consts::PI),
            MeasureKind::ExponentialProduct if n <= 2 => {
                let s: f64 = u.iter().map(|v| v.abs()).sum();
                let rs = radius * s;
                let base = if n == 1 {
                    -(-rs).exp_m1() / s
                } else {
                    (1.0 - (-rs).exp() * (1.0 + rs)) / (s * s)
                };
                base / 2f64.powi(n)
            }
            _ => {
                let h = radius / RADIAL_STEPS as f64;
                let mut p = [0.0; 3];
                let mut acc = 0.0;
                for k in 0..RADIAL_STEPS {
                    let t = (k as f64 + 0.5) * h;
                    for j in 0..self.dim {
                        p[j] = t * u[j];
                    }
                    acc += self.density(&p[..self.dim]) * t.powi(n - 1);
                }
                acc * h
            }
        }
    }

    /// Re-verifies nonnegativity and the declared homogeneity, unconditional
    /// and log-concavity flags on random points in `[-3, 3]^n`.
    pub fn verify(&self, samples: usize, seed: u64) -> MeasureCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = MeasureCheck::default();
        let n = self.dim;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect() };
        for _ in 0..samples {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let dx = self.density(&x);
            if dx < 0.0 || dx.is_nan() {
                out.negative_density = true;
            }
            if let Some(r) = self.homogeneity {
                for t in [0.5, 2.0] {
                    let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                    let expect = t.powf(r) * dx;
                    let res = (self.density(&tx) - expect).abs() / expect.abs().max(1e-300);
                    out.homogeneity_residual = out.homogeneity_residual.max(res);
                }
            }
            if self.unconditional {
                for mask in 1..(1usize << n) {
                    let sx: Vec<f64> =
                        x.iter().enumerate().map(|(j, v)| if mask >> j & 1 == 1 { -v } else { *v }).collect();
                    let res = (self.density(&sx) - dx).abs() / dx.abs().max(1e-300);
                    out.unconditional_residual = out.unconditional_residual.max(res);
                }
            }
            if self.log_concave {
                let dy = self.density(&y);
                let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let dm = self.density(&mid);
                if dx > 0.0 && dy > 0.0 {
                    // log rho(mid) >= (log rho(x) + log rho(y)) / 2
                    let v = 0.5 * (dx.ln() + dy.ln()) - dm.ln();
                    out.log_concavity_violation = out.log_concavity_violation.max(v);
                }
            }
        }
        out.ok = !out.negative_density
            && out.homogeneity_residual < 1e-9
            && out.unconditional_residual < 1e-9
            && out.log_concavity_violation < 1e-9;
        out
    }

    /// Largest sampled violation of: `t -> rho(y + t e_axis)` even and
    /// nonincreasing on `[0, inf)`.
    pub fn axial_monotone_violation(&self, axis: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let mut y: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            y[axis] = 0.0;
            let t1: f64 = rng.gen_range(0.0..3.0);
            let t2: f64 = rng.gen_range(0.0..3.0);
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let at = |t: f64| {
                let mut p = y.clone();
                p[axis] = t;
                self.density(&p)
            };
            let scale = at(lo).abs().max(1e-300);
            worst = worst.max((at(hi) - at(lo)) / scale);
            worst = worst.max((at(lo) - at(-lo)).abs() / scale);
        }
        worst
    }

    /// Largest sampled violation of: `y -> rho(y + t e_axis)` symmetric and
    /// log-concave for every `t`.
    pub fn sectional_log_concavity_violation(&self, axis: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let t: f64 = rng.gen_range(-3.0..3.0);
            let mut a: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let mut b: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
            a[axis] = t;
            b[axis] = t;
            let m: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * (p + q)).collect();
            let mut neg_a: Vec<f64> = a.iter().map(|v| -v).collect();
            neg_a[axis] = t;
            let (da, db, dm) = (self.density(&a), self.density(&b), self.density(&m));
            if da > 0.0 {
                worst = worst.max((self.density(&neg_a) - da).abs() / da);
            }
            if da > 0.0 && db > 0.0 {
                let v = 0.5 * (da.ln() + db.ln()) - dm.max(1e-300).ln();
                worst = worst.max(v);
            }
        }
        worst
    }
}
