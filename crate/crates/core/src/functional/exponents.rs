use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::costs::CostSpec;
use crate::{Error, Result};

/// Exponent bookkeeping for an `(p_1, ..., p_N)`-homogeneous cost and
/// `r_i`-homogeneous reference densities in dimension `n`, in exact rational
/// arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentSystem {
    pub n: i64,
    pub p: Vec<Rational64>,
    pub r: Vec<Rational64>,
    pub alpha: Vec<Rational64>,
    pub beta: Vec<Rational64>,
    pub tau: Vec<Rational64>,
    /// Joint degree of the cost.
    pub joint: Rational64,
    /// `A = sum 1/alpha_i`.
    pub a: Rational64,
}

/// Residuals of the three consistency relations (all zero for a consistent
/// system).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyResiduals {
    pub joint_degree: Rational64,
    pub equal_ratios: Rational64,
    pub holder_budget: Rational64,
}

impl ExponentSystem {
    pub fn new(p: Vec<Rational64>, r: Vec<Rational64>, n: i64) -> Result<Self> {
        if p.len() != r.len() || p.len() < 2 {
            return Err(Error::InvalidInput("need matching p and r lists with N >= 2".into()));
        }
        if n < 1 {
            return Err(Error::InvalidInput("dimension must be >= 1".into()));
        }
        if p.iter().any(|v| !v.is_positive()) || r.iter().any(|v| v.is_negative()) {
            return Err(Error::InvalidInput("need p_i > 0 and r_i >= 0".into()));
        }
        let nr = Rational64::from_integer(n);
        let alpha: Vec<Rational64> = p.iter().zip(&r).map(|(pi, ri)| (nr + ri) / (nr * pi)).collect();
        let a: Rational64 = alpha.iter().map(|x| x.recip()).sum();
        let beta: Vec<Rational64> = r.iter().map(|ri| a * (Rational64::one() + ri / nr)).collect();
        let tau: Vec<Rational64> = alpha.iter().map(|x| x.recip() / a).collect();
        let joint = alpha.iter().zip(&beta).map(|(al, be)| be / al).sum::<Rational64>() / a;
        let sys = Self { n, p, r, alpha, beta, tau, joint, a };
        let res = sys.residuals();
        if !(res.joint_degree.is_zero() && res.equal_ratios.is_zero() && res.holder_budget.is_zero()) {
            return Err(Error::Hypothesis(format!("exponent system inconsistent: {res:?}")));
        }
        Ok(sys)
    }

    /// Exponents for a cost with declared per-marginal degrees and the given
    /// density degrees. Costs without per-marginal degrees (the barycentric
    /// cost) are refused.
    pub fn for_cost(cost: &CostSpec, r: Vec<Rational64>) -> Result<Self> {
        let p = cost
            .rational_degrees()
            .ok_or_else(|| Error::Hypothesis(format!("cost `{}` has no per-marginal degrees", cost.family_name())))?;
        Self::new(p, r, cost.dim() as i64)
    }

    pub fn marginals(&self) -> usize {
        self.p.len()
    }

    pub fn residuals(&self) -> ConsistencyResiduals {
        let nr = Rational64::from_integer(self.n);
        let num: Rational64 = self.r.iter().zip(&self.alpha).map(|(ri, al)| (nr + ri) / al).sum();
        let den: Rational64 =
            self.r.iter().zip(&self.alpha).zip(&self.beta).map(|((ri, al), be)| (nr + ri) / (al * be)).sum();
        let joint_degree = (self.joint - num / den).abs();
        let ratios: Vec<Rational64> = self.r.iter().zip(&self.beta).map(|(ri, be)| (nr + ri) / be).collect();
        let equal_ratios = ratios
            .iter()
            .flat_map(|x| ratios.iter().map(move |y| (x - y).abs()))
            .max()
            .unwrap_or_else(Rational64::zero);
        let budget: Rational64 = self.p.iter().zip(&self.beta).map(|(pi, be)| pi / be).sum();
        ConsistencyResiduals { joint_degree, equal_ratios, holder_budget: (budget - Rational64::one()).abs() }
    }

    pub fn alpha_f64(&self) -> Vec<f64> {
        to_f64(&self.alpha)
    }

    pub fn beta_f64(&self) -> Vec<f64> {
        to_f64(&self.beta)
    }

    pub fn tau_f64(&self) -> Vec<f64> {
        to_f64(&self.tau)
    }

    pub fn p_f64(&self) -> Vec<f64> {
        to_f64(&self.p)
    }

    pub fn r_f64(&self) -> Vec<f64> {
        to_f64(&self.r)
    }

    pub fn joint_f64(&self) -> f64 {
        self.joint.to_f64().unwrap_or(f64::NAN)
    }

    pub fn a_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN)
    }

    /// First-order target `sum_i (n + r_i) / (p alpha_i)`.
    pub fn first_order_target(&self) -> Rational64 {
        let nr = Rational64::from_integer(self.n);
        self.r.iter().zip(&self.alpha).map(|(ri, al)| (nr + ri) / (self.joint * al)).sum()
    }
}

fn to_f64(v: &[Rational64]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

/// Convenience wrapper: exponent system from degree and density-degree lists.
pub fn exponents_from_cost(p: &[Rational64], r: &[Rational64], n: i64) -> Result<ExponentSystem> {
    ExponentSystem::new(p.to_vec(), r.to_vec(), n)
}
