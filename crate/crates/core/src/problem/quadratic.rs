//! Diagonal quadratic objectives with per-sample centers.
//!
//! `φ_ij(v) = ½ Σ_k d_ijk (v_k - c_ijk)²`. Every constant is exact, and the
//! flat minimizer has a closed form, which makes these the workhorse for
//! fixed-point and scaling tests.

use crate::error::{Error, Result};
use crate::linalg::{BlockVector, DenseVector};
use crate::problem::{ProblemConstants, SmoothObjective};

pub struct QuadraticObjective {
    diags: Vec<DenseVector>,
    centers: Vec<DenseVector>,
    num_hubs: usize,
    shard: usize,
    dim: usize,
    constants: ProblemConstants,
}

impl QuadraticObjective {
    /// `diags`/`centers` are shard-major: hub `i` owns entries
    /// `i*m .. (i+1)*m`. Every diagonal entry must be nonnegative and the
    /// averaged Hessian strictly positive definite.
    pub fn new(
        diags: Vec<DenseVector>,
        centers: Vec<DenseVector>,
        num_hubs: usize,
    ) -> Result<Self> {
        if diags.is_empty() || diags.len() != centers.len() {
            return Err(Error::InvalidProblem(
                "diagonals and centers must be non-empty and aligned".into(),
            ));
        }
        if num_hubs == 0 || diags.len() % num_hubs != 0 {
            return Err(Error::InvalidProblem(format!(
                "{} samples cannot be split into {num_hubs} equal shards",
                diags.len()
            )));
        }
        let dim = diags[0].dim();
        if diags
            .iter()
            .zip(&centers)
            .any(|(d, c)| d.dim() != dim || c.dim() != dim)
        {
            return Err(Error::InvalidProblem(
                "all samples must share one dimension".into(),
            ));
        }
        if diags
            .iter()
            .any(|d| d.entries().iter().any(|&v| !(v >= 0.0)))
        {
            return Err(Error::InvalidProblem(
                "diagonal entries must be nonnegative".into(),
            ));
        }
        let shard = diags.len() / num_hubs;
        let constants = exact_constants(&diags, num_hubs, shard, dim)?;
        Ok(QuadraticObjective {
            diags,
            centers,
            num_hubs,
            shard,
            dim,
            constants,
        })
    }

    /// Convenience: one sample per hub.
    pub fn per_hub(diags: Vec<DenseVector>, centers: Vec<DenseVector>) -> Result<Self> {
        let hubs = diags.len();
        QuadraticObjective::new(diags, centers, hubs)
    }

    fn sample(&self, i: usize, j: usize) -> (&DenseVector, &DenseVector) {
        let idx = i * self.shard + j;
        (&self.diags[idx], &self.centers[idx])
    }

    /// Closed-form minimizer of the flat average `(1/(Mm)) Σ_ij φ_ij`:
    /// coordinatewise weighted mean of the centers.
    pub fn flat_minimizer(&self) -> DenseVector {
        let mut num = vec![0.0; self.dim];
        let mut den = vec![0.0; self.dim];
        for (d, c) in self.diags.iter().zip(&self.centers) {
            for k in 0..self.dim {
                num[k] += d.entries()[k] * c.entries()[k];
                den[k] += d.entries()[k];
            }
        }
        DenseVector::new(num.iter().zip(&den).map(|(n, d)| n / d).collect())
    }

    /// Minimizer of the lifted problem under the consensus regularizer.
    pub fn consensus_minimizer(&self) -> BlockVector {
        BlockVector::replicate(&self.flat_minimizer(), self.num_hubs)
    }

    /// Minimizer of the lifted problem with `r ≡ 0`: each block minimizes
    /// its own hub average independently.
    pub fn blockwise_minimizer(&self) -> BlockVector {
        let blocks = (0..self.num_hubs)
            .map(|i| {
                let mut num = vec![0.0; self.dim];
                let mut den = vec![0.0; self.dim];
                for j in 0..self.shard {
                    let (d, c) = self.sample(i, j);
                    for k in 0..self.dim {
                        num[k] += d.entries()[k] * c.entries()[k];
                        den[k] += d.entries()[k];
                    }
                }
                DenseVector::new(num.iter().zip(&den).map(|(n, d)| n / d).collect())
            })
            .collect();
        BlockVector::new(blocks)
    }
}

impl SmoothObjective for QuadraticObjective {
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
        let (d, c) = self.sample(i, j);
        0.5 * d
            .entries()
            .iter()
            .zip(c.entries())
            .zip(v.entries())
            .map(|((dk, ck), vk)| dk * (vk - ck) * (vk - ck))
            .sum::<f64>()
    }

    fn sample_gradient(&self, i: usize, j: usize, v: &DenseVector) -> DenseVector {
        let (d, c) = self.sample(i, j);
        DenseVector::new(
            d.entries()
                .iter()
                .zip(c.entries())
                .zip(v.entries())
                .map(|((dk, ck), vk)| dk * (vk - ck))
                .collect(),
        )
    }
}

fn exact_constants(
    diags: &[DenseVector],
    num_hubs: usize,
    shard: usize,
    dim: usize,
) -> Result<ProblemConstants> {
    let hub_scale = 1.0 / num_hubs as f64;
    // Aggregate Hessian is block diagonal: block i carries (1/(Mm)) Σ_j d_ij.
    let mut l = 0.0f64;
    let mut mu = f64::INFINITY;
    for i in 0..num_hubs {
        for k in 0..dim {
            let sum: f64 = (0..shard).map(|j| diags[i * shard + j].entries()[k]).sum();
            let eig = hub_scale * sum / shard as f64;
            l = l.max(eig);
            mu = mu.min(eig);
        }
    }
    // Lifted component φ̃_j: block-diagonal with blocks (1/M) diag(d_ij).
    let l_max = diags
        .iter()
        .map(|d| hub_scale * d.entries().iter().cloned().fold(0.0f64, f64::max))
        .fold(0.0f64, f64::max);
    if !(mu > 0.0) {
        return Err(Error::InvalidProblem(
            "averaged Hessian is not positive definite".into(),
        ));
    }
    Ok(ProblemConstants { l, l_max, mu })
}
