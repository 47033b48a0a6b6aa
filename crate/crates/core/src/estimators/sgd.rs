//! Fresh uniform-minibatch estimator (no control state).

use crate::error::{Error, Result};
use crate::estimators::{
    minibatch_smoothness, EstimatorKind, EstimatorParams, GradientEstimator,
};
use crate::linalg::{BlockVector, DenseVector};
use crate::problem::CompositeProblem;
use crate::rng::Rng;

/// `g_i = (1/M) (1/τ) Σ_{j ∈ S_i} ∇φ_ij(x_i)` with one independent τ-subset
/// per hub. `A = 2 L(τ)`, `B = 0`; the neighborhood constant
/// `C = 2 Var(g(x*, ξ))` is measured on demand.
pub struct MinibatchSgd {
    tau: usize,
    charge: u64,
}

impl MinibatchSgd {
    pub fn new(tau: usize, problem: &CompositeProblem) -> Result<Self> {
        if tau < 1 || tau > problem.shard_size() {
            return Err(Error::InvalidInput(format!(
                "minibatch size {tau} outside [1, {}]",
                problem.shard_size()
            )));
        }
        Ok(MinibatchSgd { tau, charge: 0 })
    }

    /// One raw draw of the estimator at `x` (shared by `estimate` and the
    /// variance measurement).
    pub fn draw(
        problem: &CompositeProblem,
        x: &BlockVector,
        tau: usize,
        rng: &mut Rng,
    ) -> Result<BlockVector> {
        let hubs = problem.num_hubs();
        let m = problem.shard_size();
        let hub_scale = 1.0 / hubs as f64;
        let subsets: Vec<Vec<usize>> = (0..hubs)
            .map(|_| rng.sample_subset(m, tau))
            .collect::<Result<_>>()?;
        let blocks = (0..hubs)
            .map(|i| {
                let mut acc = DenseVector::zeros(problem.block_dim());
                for &j in &subsets[i] {
                    acc.axpy(1.0, &problem.sample_gradient(i, j, x.block(i)));
                }
                acc.scale_in_place(1.0 / tau as f64);
                acc.scale(hub_scale)
            })
            .collect();
        Ok(BlockVector::new(blocks))
    }

    /// Monte Carlo estimate of `Var(g(x*, ξ)) = E‖g(x*, ξ) - ∇f(x*)‖²` at
    /// the cached minimizer.
    pub fn variance_at_optimum(
        problem: &CompositeProblem,
        tau: usize,
        samples: usize,
        rng: &mut Rng,
    ) -> Result<f64> {
        let reference = problem.require_reference()?;
        let mut acc = 0.0;
        for _ in 0..samples {
            let g = MinibatchSgd::draw(problem, &reference.x_star, tau, rng)?;
            acc += g.dist_sq(&reference.h_star);
        }
        Ok(acc / samples as f64)
    }
}

impl GradientEstimator for MinibatchSgd {
    fn kind(&self) -> EstimatorKind {
        EstimatorKind::Sgd { tau: self.tau }
    }

    fn init(&mut self, _problem: &CompositeProblem, _x0: &BlockVector) -> Result<()> {
        Ok(())
    }

    fn estimate(
        &mut self,
        problem: &CompositeProblem,
        x: &BlockVector,
        rng: &mut Rng,
    ) -> Result<BlockVector> {
        self.charge += self.tau as u64;
        MinibatchSgd::draw(problem, x, self.tau, rng)
    }

    fn params(&self, problem: &CompositeProblem) -> Result<EstimatorParams> {
        let consts = problem.constants();
        let l_tau = minibatch_smoothness(self.tau, problem.shard_size(), consts.l, consts.l_max)?;
        Ok(EstimatorParams::deterministic(2.0 * l_tau))
    }

    fn drain_charge(&mut self) -> u64 {
        std::mem::take(&mut self.charge)
    }
}
