//! Numerical laboratory for generalized Blaschke-Santalo inequalities.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: Cartesian and direction grids, star bodies, reference
//!   measures, quadrature.
//! * [`costs`]: cost families and sampled checks of their structural
//!   hypotheses.
//! * [`transforms`]: multiple c-Legendre transforms, c-polar transforms,
//!   best-response cycles and the homogeneous lift from bodies to potentials.
//! * [`functional`]: the functional itself, exponent bookkeeping, admissibility
//!   and stationarity diagnostics, the weighted-product inequality.
//! * [`transport`]: exact and entropic multimarginal transport and the
//!   transport-based monotonicity, transport-entropy and certificate checks.
//! * [`sphere`]: reduction of homogeneous tuples to profiles on the circle.
//! * [`symmetrize`]: Steiner-type symmetrization of body tuples.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
mod error;
pub mod functional;
pub mod geometry;
pub mod par;
pub mod sphere;
pub mod symmetrize;
pub mod transforms;
pub mod transport;

pub use error::{Error, Result};
