//! The exact-gradient estimator.

use crate::error::Result;
use crate::estimators::{EstimatorKind, EstimatorParams, GradientEstimator};
use crate::linalg::BlockVector;
use crate::problem::CompositeProblem;
use crate::rng::Rng;

/// `g = ∇f(x)`: deterministic, `A = L`, everything else zero.
pub struct GdEstimator {
    charge: u64,
}

impl GdEstimator {
    pub fn new() -> Self {
        GdEstimator { charge: 0 }
    }
}

impl Default for GdEstimator {
    fn default() -> Self {
        Self::new()
    }
}

impl GradientEstimator for GdEstimator {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Gd
    }

    fn init(&mut self, _problem: &CompositeProblem, _x0: &BlockVector) -> Result<()> {
        Ok(())
    }

    fn estimate(
        &mut self,
        problem: &CompositeProblem,
        x: &BlockVector,
        _rng: &mut Rng,
    ) -> Result<BlockVector> {
        self.charge += problem.shard_size() as u64;
        Ok(problem.gradient(x))
    }

    fn params(&self, problem: &CompositeProblem) -> Result<EstimatorParams> {
        Ok(EstimatorParams::deterministic(problem.constants().l))
    }

    fn drain_charge(&mut self) -> u64 {
        std::mem::take(&mut self.charge)
    }
}
