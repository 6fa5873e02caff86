//! Multiple c-Legendre transforms, c-polar transforms of bodies, best-response
//! cycles and the homogeneous lift from bodies to potentials.

mod cycle;
mod envelope;
mod legendre;
mod lift;
mod polar;
mod random;

pub use cycle::{best_response_cycle, CycleTrace};
pub use envelope::LineEnvelope;
pub use legendre::{c_legendre_component, LegendreOutput, Strategy};
pub use lift::homogeneous_lift;
pub use polar::{body_tuple_max_cost, c_polar_component, PolarOutput};
pub use random::random_even_convex;

use serde::{Deserialize, Serialize};

use crate::costs::{CostJson, CostSpec};
use crate::geometry::{CartesianGrid, GridFunction, StarBody};
use crate::{Error, Result};

/// N even potentials on a shared grid, a cost, and the weights `alpha_i`.
#[derive(Clone, Debug)]
pub struct FunctionTuple {
    components: Vec<GridFunction>,
    cost: CostSpec,
    alpha: Vec<f64>,
}

impl FunctionTuple {
    pub fn new(components: Vec<GridFunction>, cost: CostSpec, alpha: Vec<f64>) -> Result<Self> {
        if components.len() != cost.marginals() || alpha.len() != cost.marginals() {
            return Err(Error::DimensionMismatch { expected: cost.marginals(), got: components.len() });
        }
        let grid = components[0].grid().clone();
        if grid.dim != cost.dim() {
            return Err(Error::DimensionMismatch { expected: cost.dim(), got: grid.dim });
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::InvalidInput("all components must share one grid".into()));
        }
        if alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::InvalidInput("alpha_i must be positive".into()));
        }
        Ok(Self { components, cost, alpha })
    }

    pub fn grid(&self) -> &CartesianGrid {
        self.components[0].grid()
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn components(&self) -> &[GridFunction] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &GridFunction {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn replace(&mut self, i: usize, v: GridFunction) -> Result<()> {
        if v.grid() != self.grid() {
            return Err(Error::InvalidInput("replacement lives on a different grid".into()));
        }
        self.components[i] = v;
        Ok(())
    }

    pub fn with_component(&self, i: usize, v: GridFunction) -> Result<Self> {
        let mut t = self.clone();
        t.replace(i, v)?;
        Ok(t)
    }

    pub fn to_json(&self) -> TupleJson {
        TupleJson { cost: (&self.cost).into(), alpha: self.alpha.clone(), components: self.components.clone() }
    }

    pub fn from_json(j: TupleJson) -> Result<Self> {
        let cost = CostSpec::try_from(j.cost)?;
        Self::new(j.components, cost, j.alpha)
    }
}

/// JSON form of a [`FunctionTuple`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TupleJson {
    pub cost: CostJson,
    pub alpha: Vec<f64>,
    pub components: Vec<GridFunction>,
}

/// N symmetric star bodies on a shared direction grid, plus a cost.
#[derive(Clone, Debug)]
pub struct BodyTuple {
    bodies: Vec<StarBody>,
    cost: CostSpec,
}

impl BodyTuple {
    pub fn new(bodies: Vec<StarBody>, cost: CostSpec) -> Result<Self> {
        if bodies.len() != cost.marginals() {
            return Err(Error::DimensionMismatch { expected: cost.marginals(), got: bodies.len() });
        }
        let grid = bodies[0].grid().clone();
        if grid.dim() != cost.dim() {
            return Err(Error::DimensionMismatch { expected: cost.dim(), got: grid.dim() });
        }
        if bodies.iter().any(|b| *b.grid() != grid) {
            return Err(Error::InvalidInput("all bodies must share one direction grid".into()));
        }
        Ok(Self { bodies, cost })
    }

    pub fn bodies(&self) -> &[StarBody] {
        &self.bodies
    }

    pub fn body(&self, i: usize) -> &StarBody {
        &self.bodies[i]
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn with_body(&self, i: usize, b: StarBody) -> Result<Self> {
        let mut bodies = self.bodies.clone();
        bodies[i] = b;
        Self::new(bodies, self.cost.clone())
    }
}
