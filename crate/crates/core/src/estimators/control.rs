//! Control-variate estimators: sampling-only (LSVRG-style) and the
//! compressed hub estimator.
//!
//! Per hub `i` with shard subset `S_i` (one independent subset per hub) the
//! hub gradient is estimated as
//!
//! ```text
//! g_i = (1/τ) Σ_{j ∈ S_i} Q_ij( ∇φ_ij(x_i) - ∇φ_ij(y_i) ) + ∇φ_i(y_i),
//! ```
//!
//! with one independent compressor draw per `(i, j)`, and the global estimate
//! concatenates `(1/M) g_i`. The shared control vector `y` jumps to the
//! pre-step iterate with probability `q` after the prox coin.
//!
//! Draw order inside one step: subsets (hubs ascending), then compressor
//! draws (hubs ascending, sampled clients ascending). The identity compressor
//! consumes no draws, so the sampling-only estimator and the hub estimator
//! with identity compression replay each other bit for bit.

use crate::error::{Error, Result};
use crate::estimators::{
    declared_params, minibatch_second_moment, Compressor, EstimatorKind, EstimatorParams,
    GradientEstimator,
};
use crate::linalg::{BlockVector, DenseVector};
use crate::problem::CompositeProblem;
use crate::rng::Rng;

#[derive(Clone)]
pub struct ControlVariateEstimator {
    kind: EstimatorKind,
    tau: usize,
    q: f64,
    compressor: Compressor,
    y: BlockVector,
    /// `∇φ_ij(y_i)`, unscaled, indexed `[hub][sample]`.
    grads_y: Vec<Vec<DenseVector>>,
    /// `∇φ_i(y_i)`, unscaled.
    hub_grad_y: Vec<DenseVector>,
    grads_star: Vec<Vec<DenseVector>>,
    hub_grad_star: Vec<DenseVector>,
    sigma: f64,
    charge: u64,
    ready: bool,
}

impl ControlVariateEstimator {
    pub fn new(
        kind: EstimatorKind,
        tau: usize,
        q: f64,
        compressor: Compressor,
        problem: &CompositeProblem,
    ) -> Result<Self> {
        if tau < 1 || tau > problem.shard_size() {
            return Err(Error::InvalidInput(format!(
                "minibatch size {tau} outside [1, {}]",
                problem.shard_size()
            )));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "control probability q must lie in (0, 1], got {q}"
            )));
        }
        Ok(ControlVariateEstimator {
            kind,
            tau,
            q,
            compressor,
            y: BlockVector::zeros(problem.num_hubs(), problem.block_dim()),
            grads_y: Vec::new(),
            hub_grad_y: Vec::new(),
            grads_star: Vec::new(),
            hub_grad_star: Vec::new(),
            sigma: 0.0,
            charge: 0,
            ready: false,
        })
    }

    pub fn control_vector(&self) -> &BlockVector {
        &self.y
    }

    /// Whether the refined sampling-only constants apply (`ω = 0`).
    fn refined(&self) -> bool {
        self.compressor.omega() == 0.0
    }

    fn gradient_table(
        problem: &CompositeProblem,
        x: &BlockVector,
    ) -> (Vec<Vec<DenseVector>>, Vec<DenseVector>) {
        let hubs = problem.num_hubs();
        let m = problem.shard_size();
        let mut table = Vec::with_capacity(hubs);
        let mut hub_grads = Vec::with_capacity(hubs);
        for i in 0..hubs {
            let per_sample: Vec<DenseVector> = (0..m)
                .map(|j| problem.sample_gradient(i, j, x.block(i)))
                .collect();
            // Same ascending accumulation as the gradient path, so a cached
            // hub gradient is bitwise identical to a fresh one.
            let mut acc = DenseVector::zeros(problem.block_dim());
            for g in &per_sample {
                acc.axpy(1.0, g);
            }
            acc.scale_in_place(1.0 / m as f64);
            table.push(per_sample);
            hub_grads.push(acc);
        }
        (table, hub_grads)
    }

    fn sigma_of_tables(
        &self,
        problem: &CompositeProblem,
        grads: &[Vec<DenseVector>],
        hub_grads: &[DenseVector],
    ) -> f64 {
        let hubs = problem.num_hubs() as f64;
        let m = problem.shard_size();
        let block_scale = 1.0 / (hubs * hubs);
        let mut within = 0.0;
        for j in 0..m {
            let mut norm_sq = 0.0;
            for i in 0..problem.num_hubs() {
                norm_sq += grads[i][j].dist_sq(&self.grads_star[i][j]);
            }
            within += block_scale * norm_sq;
        }
        within /= m as f64;
        if self.refined() {
            let between: f64 = (0..problem.num_hubs())
                .map(|i| block_scale * hub_grads[i].dist_sq(&self.hub_grad_star[i]))
                .sum();
            minibatch_second_moment(within, between, m, self.tau)
        } else {
            within
        }
    }

    fn refresh(&mut self, problem: &CompositeProblem, point: &BlockVector) {
        let (grads, hub_grads) = Self::gradient_table(problem, point);
        self.sigma = self.sigma_of_tables(problem, &grads, &hub_grads);
        self.y = point.clone();
        self.grads_y = grads;
        self.hub_grad_y = hub_grads;
    }
}

impl GradientEstimator for ControlVariateEstimator {
    fn kind(&self) -> EstimatorKind {
        self.kind
    }

    fn init(&mut self, problem: &CompositeProblem, x0: &BlockVector) -> Result<()> {
        problem.check_shape(x0)?;
        let reference = problem.require_reference()?;
        let (grads_star, hub_grad_star) = Self::gradient_table(problem, &reference.x_star);
        self.grads_star = grads_star;
        self.hub_grad_star = hub_grad_star;
        self.refresh(problem, x0);
        self.ready = true;
        Ok(())
    }

    fn estimate(
        &mut self,
        problem: &CompositeProblem,
        x: &BlockVector,
        rng: &mut Rng,
    ) -> Result<BlockVector> {
        if !self.ready {
            return Err(Error::InvalidInput(
                "control-variate estimator used before init".into(),
            ));
        }
        problem.check_shape(x)?;
        let hubs = problem.num_hubs();
        let m = problem.shard_size();
        let hub_scale = 1.0 / hubs as f64;
        let subsets: Vec<Vec<usize>> = (0..hubs)
            .map(|_| rng.sample_subset(m, self.tau))
            .collect::<Result<_>>()?;
        let identity = matches!(self.compressor.spec(), crate::estimators::CompressorSpec::Identity);
        let mut blocks = Vec::with_capacity(hubs);
        for i in 0..hubs {
            let mut acc = DenseVector::zeros(problem.block_dim());
            for &j in &subsets[i] {
                let diff = problem
                    .sample_gradient(i, j, x.block(i))
                    .sub(&self.grads_y[i][j]);
                if identity {
                    acc.axpy(1.0, &diff);
                } else {
                    acc.axpy(1.0, &self.compressor.apply(&diff, rng)?);
                }
            }
            acc.scale_in_place(1.0 / self.tau as f64);
            acc.axpy(1.0, &self.hub_grad_y[i]);
            blocks.push(acc.scale(hub_scale));
        }
        self.charge += self.tau as u64;
        Ok(BlockVector::new(blocks))
    }

    fn post_step_update(
        &mut self,
        problem: &CompositeProblem,
        x_pre: &BlockVector,
        rng: &mut Rng,
    ) -> Result<bool> {
        let refresh = rng.bernoulli(self.q)?;
        if refresh {
            // Full component-gradient pass at the new control point.
            self.refresh(problem, x_pre);
            self.charge += problem.shard_size() as u64;
        } else {
            // Accounting model: the stochastic gradients at the unchanged y
            // are charged even though the cache already holds them.
            self.charge += self.tau as u64;
        }
        Ok(refresh)
    }

    fn params(&self, problem: &CompositeProblem) -> Result<EstimatorParams> {
        declared_params(&self.kind, problem, self.q)
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn sigma_at(&self, problem: &CompositeProblem, v: &BlockVector) -> Result<f64> {
        if !self.ready {
            return Err(Error::InvalidInput(
                "control-variate estimator used before init".into(),
            ));
        }
        problem.check_shape(v)?;
        let (grads, hub_grads) = Self::gradient_table(problem, v);
        Ok(self.sigma_of_tables(problem, &grads, &hub_grads))
    }

    fn control_point(&self) -> Option<&BlockVector> {
        Some(&self.y)
    }

    fn drain_charge(&mut self) -> u64 {
        std::mem::take(&mut self.charge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::CompressorSpec;
    use crate::problem::{QuadraticObjective, Regularizer};

    fn lifted_quadratic() -> CompositeProblem {
        let q = QuadraticObjective::new(
            vec![
                DenseVector::new(vec![2.0, 1.0]),
                DenseVector::new(vec![1.0, 3.0]),
                DenseVector::new(vec![4.0, 2.0]),
                DenseVector::new(vec![1.0, 1.0]),
                DenseVector::new(vec![3.0, 2.0]),
                DenseVector::new(vec![2.0, 4.0]),
            ],
            vec![
                DenseVector::new(vec![1.0, 0.0]),
                DenseVector::new(vec![0.0, 2.0]),
                DenseVector::new(vec![-1.0, 1.0]),
                DenseVector::new(vec![3.0, -2.0]),
                DenseVector::new(vec![0.5, 0.5]),
                DenseVector::new(vec![-2.0, 1.0]),
            ],
            2,
        )
        .unwrap();
        let x_star = q.consensus_minimizer();
        let mut p = CompositeProblem::new(Box::new(q), Regularizer::Consensus);
        p.set_reference(x_star).unwrap();
        p
    }

    fn sampling_estimator(p: &CompositeProblem, tau: usize, q: f64) -> ControlVariateEstimator {
        ControlVariateEstimator::new(
            EstimatorKind::Lsvrg { tau },
            tau,
            q,
            Compressor::identity(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn control_at_the_query_point_gives_the_exact_gradient() {
        let p = lifted_quadratic();
        let x = BlockVector::new(vec![
            DenseVector::new(vec![0.4, -0.7]),
            DenseVector::new(vec![1.1, 0.2]),
        ]);
        let mut est = sampling_estimator(&p, 2, 0.5);
        est.init(&p, &x).unwrap(); // y = x
        let g = est.estimate(&p, &x, &mut Rng::new(5)).unwrap();
        assert_eq!(g, p.gradient(&x), "differences cancel bitwise when y = x");
    }

    #[test]
    fn full_batch_with_identity_compression_is_exact() {
        let p = lifted_quadratic();
        let x0 = BlockVector::zeros(2, 2);
        let x = BlockVector::new(vec![
            DenseVector::new(vec![0.9, 0.1]),
            DenseVector::new(vec![-0.3, 0.8]),
        ]);
        let mut est = sampling_estimator(&p, 3, 0.5);
        est.init(&p, &x0).unwrap();
        let g = est.estimate(&p, &x, &mut Rng::new(6)).unwrap();
        let exact = p.gradient(&x);
        let scale = exact.norm_sq().sqrt().max(1.0);
        assert!(
            g.dist_sq(&exact).sqrt() <= 1e-13 * scale,
            "full-batch telescoping drifted: {:e}",
            g.dist_sq(&exact).sqrt()
        );
    }

    #[test]
    fn identity_hub_and_sampling_estimator_replay_identically() {
        let p = lifted_quadratic();
        let x0 = BlockVector::zeros(2, 2);
        let x = BlockVector::new(vec![
            DenseVector::new(vec![0.9, 0.1]),
            DenseVector::new(vec![-0.3, 0.8]),
        ]);
        let mut lsvrg = sampling_estimator(&p, 2, 0.3);
        let mut hub = ControlVariateEstimator::new(
            EstimatorKind::Hub {
                tau: 2,
                compressor: CompressorSpec::Identity,
            },
            2,
            0.3,
            Compressor::new(CompressorSpec::Identity, 2).unwrap(),
            &p,
        )
        .unwrap();
        lsvrg.init(&p, &x0).unwrap();
        hub.init(&p, &x0).unwrap();
        let mut r1 = Rng::new(77);
        let mut r2 = Rng::new(77);
        for _ in 0..20 {
            let g1 = lsvrg.estimate(&p, &x, &mut r1).unwrap();
            let g2 = hub.estimate(&p, &x, &mut r2).unwrap();
            assert_eq!(g1, g2);
            let u1 = lsvrg.post_step_update(&p, &x, &mut r1).unwrap();
            let u2 = hub.post_step_update(&p, &x, &mut r2).unwrap();
            assert_eq!(u1, u2);
            assert_eq!(lsvrg.sigma(), hub.sigma());
        }
        assert_eq!(r1.draws(), r2.draws());
    }

    #[test]
    fn monte_carlo_mean_is_unbiased_with_compression() {
        let p = lifted_quadratic();
        let x0 = BlockVector::zeros(2, 2);
        let x = BlockVector::new(vec![
            DenseVector::new(vec![1.0, -1.0]),
            DenseVector::new(vec![0.5, 2.0]),
        ]);
        let mut est = ControlVariateEstimator::new(
            EstimatorKind::Hub {
                tau: 2,
                compressor: CompressorSpec::RandK { k: 1 },
            },
            2,
            0.5,
            Compressor::new(CompressorSpec::RandK { k: 1 }, 2).unwrap(),
            &p,
        )
        .unwrap();
        est.init(&p, &x0).unwrap();
        let grad = p.gradient(&x);
        let mut rng = Rng::new(31);
        let n = 100_000usize;
        let mut mean = BlockVector::zeros(2, 2);
        let mut sq = [0.0f64; 4];
        for _ in 0..n {
            let g = est.estimate(&p, &x, &mut rng).unwrap();
            mean.axpy(1.0 / n as f64, &g);
            let mut c = 0;
            for b in 0..2 {
                for k in 0..2 {
                    let v = g.block(b).entries()[k];
                    sq[c] += v * v / n as f64;
                    c += 1;
                }
            }
        }
        let mut c = 0;
        for b in 0..2 {
            for k in 0..2 {
                let mu = mean.block(b).entries()[k];
                let target = grad.block(b).entries()[k];
                let var = (sq[c] - mu * mu).max(0.0);
                let tol = 4.0 * (var / n as f64).sqrt() + 1e-12;
                assert!(
                    (mu - target).abs() <= tol,
                    "block {b} coord {k}: mean {mu} vs {target} (tol {tol})"
                );
                c += 1;
            }
        }
    }

    #[test]
    fn sigma_tracks_the_control_refresh() {
        let p = lifted_quadratic();
        let x0 = BlockVector::zeros(2, 2);
        let mut est = sampling_estimator(&p, 2, 1.0); // q = 1: always refresh
        est.init(&p, &x0).unwrap();
        let sigma0 = est.sigma();
        assert!(sigma0 > 0.0);
        let x_star = p.require_reference().unwrap().x_star.clone();
        let refreshed = est
            .post_step_update(&p, &x_star, &mut Rng::new(1))
            .unwrap();
        assert!(refreshed);
        assert!(est.sigma() <= 1e-24, "sigma at x* must vanish, got {}", est.sigma());
        assert_eq!(est.control_vector(), &x_star);
    }

    #[test]
    fn rejects_use_before_init() {
        let p = lifted_quadratic();
        let mut est = sampling_estimator(&p, 2, 0.5);
        let x = BlockVector::zeros(2, 2);
        assert!(est.estimate(&p, &x, &mut Rng::new(0)).is_err());
    }
}
