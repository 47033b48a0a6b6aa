//! L2-regularized logistic regression, sharded across hubs.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::problem::spectral::power_iteration;
use crate::problem::{ProblemConstants, SmoothObjective};

const POWER_TOL: f64 = 1e-8;
const POWER_CAP: usize = 10_000;

/// Per-sample loss `φ_ij(v) = log(1 + exp(-b a·v)) + (λ/2)‖v‖²` with the
/// rows laid out shard-major: hub `i` owns rows `i*m .. (i+1)*m`.
pub struct LogisticObjective {
    rows: Vec<DenseVector>,
    labels: Vec<f64>,
    num_hubs: usize,
    shard: usize,
    dim: usize,
    lambda: f64,
    constants: ProblemConstants,
}

impl LogisticObjective {
    pub fn new(
        rows: Vec<DenseVector>,
        labels: Vec<f64>,
        num_hubs: usize,
        lambda: f64,
    ) -> Result<Self> {
        if rows.is_empty() || rows.len() != labels.len() {
            return Err(Error::InvalidProblem(
                "rows and labels must be non-empty and aligned".into(),
            ));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "regularization weight must be positive, got {lambda}"
            )));
        }
        if num_hubs == 0 || rows.len() % num_hubs != 0 {
            return Err(Error::InvalidProblem(format!(
                "{} rows cannot be split into {num_hubs} equal shards",
                rows.len()
            )));
        }
        let dim = rows[0].dim();
        if rows.iter().any(|r| r.dim() != dim || !r.is_finite()) {
            return Err(Error::InvalidProblem(
                "rows must share one dimension and be finite".into(),
            ));
        }
        if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidProblem("labels must be ±1".into()));
        }
        let shard = rows.len() / num_hubs;
        let constants = measure_constants(&rows, num_hubs, shard, dim, lambda);
        Ok(LogisticObjective {
            rows,
            labels,
            num_hubs,
            shard,
            dim,
            lambda,
            constants,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn row(&self, i: usize, j: usize) -> (&DenseVector, f64) {
        let idx = i * self.shard + j;
        (&self.rows[idx], self.labels[idx])
    }

    /// Value and gradient of the regularized loss averaged over `subset`
    /// (all samples of hub `i` when `subset` is `None`).
    pub fn value_grad(
        &self,
        i: usize,
        v: &DenseVector,
        subset: Option<&[usize]>,
    ) -> Result<(f64, DenseVector)> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "point has dim {}, expected {}",
                v.dim(),
                self.dim
            )));
        }
        let all: Vec<usize> = (0..self.shard).collect();
        let idx = subset.unwrap_or(&all);
        if idx.iter().any(|&j| j >= self.shard) {
            return Err(Error::InvalidInput("subset index out of range".into()));
        }
        let mut value = 0.0;
        let mut grad = DenseVector::zeros(self.dim);
        for &j in idx {
            let (a, b) = self.row(i, j);
            let z = -b * a.dot(v);
            value += softplus(z);
            grad.axpy(-b * sigmoid(z), a);
        }
        let scale = 1.0 / idx.len() as f64;
        value = value * scale + 0.5 * self.lambda * v.norm_sq();
        grad.scale_in_place(scale);
        grad.axpy(self.lambda, v);
        Ok((value, grad))
    }
}

impl SmoothObjective for LogisticObjective {
    fn num_hubs(&self) -> usize {
        self.num_hubs
    }

    fn shard_size(&self) -> usize {
        self.shard
    }

    fn block_dim(&self) -> usize {
        self.dim
    }

    fn constants(&self) -> ProblemConstants {
        self.constants
    }

    fn sample_value(&self, i: usize, j: usize, v: &DenseVector) -> f64 {
        let (a, b) = self.row(i, j);
        softplus(-b * a.dot(v)) + 0.5 * self.lambda * v.norm_sq()
    }

    fn sample_gradient(&self, i: usize, j: usize, v: &DenseVector) -> DenseVector {
        let (a, b) = self.row(i, j);
        let mut g = a.scale(-b * sigmoid(-b * a.dot(v)));
        g.axpy(self.lambda, v);
        g
    }
}

/// Overflow-safe `log(1 + exp(z)) = max(z, 0) + log1p(exp(-|z|))`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Overflow-safe logistic sigmoid.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn measure_constants(
    rows: &[DenseVector],
    num_hubs: usize,
    shard: usize,
    dim: usize,
    lambda: f64,
) -> ProblemConstants {
    let hub_scale = 1.0 / num_hubs as f64;
    // Per-sample smoothness is exact: λ_max(¼ a aᵀ) = ¼‖a‖².
    let l_max_flat = rows
        .iter()
        .map(|a| 0.25 * a.norm_sq() + lambda)
        .fold(0.0f64, f64::max);
    // Per-hub aggregate: λ_max((1/(4m)) A_iᵀ A_i) + λ by power iteration.
    let mut l_flat = 0.0f64;
    for i in 0..num_hubs {
        let shard_rows = &rows[i * shard..(i + 1) * shard];
        let top = power_iteration(
            dim,
            |v| {
                let mut acc = vec![0.0; dim];
                for a in shard_rows {
                    let av: f64 = a.entries().iter().zip(v).map(|(x, y)| x * y).sum();
                    let c = av / (4.0 * shard as f64);
                    for (dst, x) in acc.iter_mut().zip(a.entries()) {
                        *dst += c * x;
                    }
                }
                acc
            },
            POWER_TOL,
            POWER_CAP,
        );
        l_flat = l_flat.max(top + lambda);
    }
    ProblemConstants {
        l: hub_scale * l_flat,
        l_max: hub_scale * l_max_flat,
        mu: hub_scale * lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BlockVector;
    use crate::problem::{CompositeProblem, Regularizer};
    use crate::rng::Rng;

    fn random_instance(rng: &mut Rng, n: usize, dim: usize, lambda: f64) -> LogisticObjective {
        let rows: Vec<DenseVector> = (0..n)
            .map(|_| DenseVector::new((0..dim).map(|_| rng.normal()).collect()))
            .collect();
        let labels: Vec<f64> = (0..n)
            .map(|_| if rng.bernoulli(0.5).unwrap() { 1.0 } else { -1.0 })
            .collect();
        LogisticObjective::new(rows, labels, 1, lambda).unwrap()
    }

    #[test]
    fn zero_feature_row_gives_log_two_plus_ridge() {
        let obj = LogisticObjective::new(
            vec![DenseVector::zeros(3)],
            vec![1.0],
            1,
            0.5,
        )
        .unwrap();
        let x = DenseVector::new(vec![1.0, 2.0, -1.0]);
        let (val, grad) = obj.value_grad(0, &x, None).unwrap();
        let expected = 2.0f64.ln() + 0.25 * x.norm_sq();
        assert!((val - expected).abs() < 1e-15);
        // Gradient is λx exactly.
        assert_eq!(grad.entries(), x.scale(0.5).entries());
    }

    #[test]
    fn value_at_origin_is_log_two_and_gradient_halves_labels() {
        let mut rng = Rng::new(2);
        let obj = random_instance(&mut rng, 12, 4, 1e-2);
        let zero = DenseVector::zeros(4);
        let (val, grad) = obj.value_grad(0, &zero, None).unwrap();
        assert!((val - 2.0f64.ln()).abs() < 1e-14);
        // ∇ at 0 is -(1/n) Σ ½ b_j a_j.
        let mut expected = DenseVector::zeros(4);
        for j in 0..12 {
            let (a, b) = obj.row(0, j);
            expected.axpy(-0.5 * b / 12.0, a);
        }
        assert!(grad.dist_sq(&expected) < 1e-28);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = Rng::new(3);
        let obj = random_instance(&mut rng, 20, 5, 1e-2);
        let x = DenseVector::new((0..5).map(|_| rng.normal()).collect());
        let (_, grad) = obj.value_grad(0, &x, None).unwrap();
        let h = 1e-6;
        let scale = grad
            .entries()
            .iter()
            .fold(1.0f64, |acc, g| acc.max(g.abs()));
        for k in 0..5 {
            let mut xp = x.clone();
            xp.entries_mut()[k] += h;
            let mut xm = x.clone();
            xm.entries_mut()[k] -= h;
            let (vp, _) = obj.value_grad(0, &xp, None).unwrap();
            let (vm, _) = obj.value_grad(0, &xm, None).unwrap();
            let fd = (vp - vm) / (2.0 * h);
            assert!(
                (fd - grad.entries()[k]).abs() / scale <= 1e-5,
                "component {k}: fd {fd} vs grad {}",
                grad.entries()[k]
            );
        }
    }

    #[test]
    fn softplus_is_stable_for_large_arguments() {
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
        assert!((softplus(0.0) - 2.0f64.ln()).abs() < 1e-16);
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) == 0.0);
    }

    #[test]
    fn strong_convexity_constant_is_the_ridge_weight() {
        let mut rng = Rng::new(4);
        let obj = random_instance(&mut rng, 30, 6, 3e-3);
        assert_eq!(obj.constants().mu, 3e-3);
    }

    #[test]
    fn subset_evaluation_averages_selected_samples_only() {
        let mut rng = Rng::new(5);
        let obj = random_instance(&mut rng, 8, 3, 1e-2);
        let x = DenseVector::new(vec![0.2, -0.4, 0.9]);
        let (v_all, _) = obj.value_grad(0, &x, Some(&[0, 1, 2, 3, 4, 5, 6, 7])).unwrap();
        let (v_none, _) = obj.value_grad(0, &x, None).unwrap();
        assert_eq!(v_all, v_none);
        assert!(obj.value_grad(0, &x, Some(&[9])).is_err());
    }

    #[test]
    fn objective_trait_agrees_with_value_grad() {
        // The trait path averages per-sample losses (each carrying the ridge
        // term) while value_grad adds the ridge once; equal up to rounding.
        let mut rng = Rng::new(6);
        let obj = random_instance(&mut rng, 10, 4, 1e-2);
        let x = DenseVector::new((0..4).map(|_| rng.normal()).collect());
        let (v, g) = obj.value_grad(0, &x, None).unwrap();
        let p = CompositeProblem::new(
            Box::new(random_instance(&mut Rng::new(6), 10, 4, 1e-2)),
            Regularizer::Zero,
        );
        let xb = BlockVector::new(vec![x]);
        assert!((p.value(&xb) - v).abs() <= 1e-14 * v.abs().max(1.0));
        assert!(p.gradient(&xb).block(0).dist_sq(&g) <= 1e-28);
    }
}
