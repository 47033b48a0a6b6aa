//! Composite problems `f + r` in the lifted consensus form.
//!
//! The smooth part is a double finite sum over hubs `i = 1..M` and shard
//! samples `j = 1..m`:
//!
//! ```text
//! f(x) = (1/M) Σ_i φ_i(x_i),     φ_i(v) = (1/m) Σ_j φ_ij(v),
//! ```
//!
//! equivalently `f = (1/m) Σ_j φ̃_j` with the lifted components
//! `φ̃_j(x) = (1/M) Σ_i φ_ij(x_i)`. Flat problems are `M = 1`. The
//! regularizer is either zero or the consensus indicator, whose prox is the
//! block mean.

mod logistic;
mod quadratic;
mod reference;
mod spectral;

pub use logistic::LogisticObjective;
pub use quadratic::QuadraticObjective;
pub use reference::{solve_reference, solve_reference_from};
pub use spectral::power_iteration;

use crate::error::{Error, Result};
use crate::linalg::{BlockVector, DenseVector};

/// Smoothness and strong-convexity constants of the smooth part.
///
/// `l` bounds the full objective `f`, `l_max` the worst lifted component
/// `φ̃_j`, and `mu` is the strong-convexity modulus. Always
/// `l_max >= l >= mu > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemConstants {
    pub l: f64,
    pub l_max: f64,
    pub mu: f64,
}

impl ProblemConstants {
    pub fn condition_number(&self) -> f64 {
        self.l / self.mu
    }
}

/// Smooth finite-sum objective exposed sample by sample.
///
/// `sample_gradient` and `sample_value` are the single source of truth:
/// hub-level and full quantities are ascending-index averages of them, which
/// keeps full-batch estimator paths bitwise identical to the gradient path.
pub trait SmoothObjective: Send + Sync {
    fn num_hubs(&self) -> usize;
    fn shard_size(&self) -> usize;
    fn block_dim(&self) -> usize;
    fn constants(&self) -> ProblemConstants;

    /// `φ_ij(v)` for hub `i`, sample `j`.
    fn sample_value(&self, i: usize, j: usize, v: &DenseVector) -> f64;

    /// `∇φ_ij(v)`.
    fn sample_gradient(&self, i: usize, j: usize, v: &DenseVector) -> DenseVector;

    /// `φ_i(v) = (1/m) Σ_j φ_ij(v)`.
    fn hub_value(&self, i: usize, v: &DenseVector) -> f64 {
        let m = self.shard_size();
        let sum: f64 = (0..m).map(|j| self.sample_value(i, j, v)).sum();
        sum / m as f64
    }

    /// `∇φ_i(v) = (1/m) Σ_j ∇φ_ij(v)`, accumulated in ascending `j`.
    fn hub_gradient(&self, i: usize, v: &DenseVector) -> DenseVector {
        let m = self.shard_size();
        let mut acc = DenseVector::zeros(self.block_dim());
        for j in 0..m {
            acc.axpy(1.0, &self.sample_gradient(i, j, v));
        }
        acc.scale_in_place(1.0 / m as f64);
        acc
    }
}

/// Regularizer with an exact proximity operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// `r ≡ 0`; the prox is the identity for any step.
    Zero,
    /// Indicator of `x_1 = .. = x_M`; the prox replicates the block mean
    /// and does not depend on the step.
    Consensus,
}

impl Regularizer {
    pub fn prox(&self, v: &BlockVector, _step: f64) -> BlockVector {
        match self {
            Regularizer::Zero => v.clone(),
            Regularizer::Consensus => BlockVector::replicate(&v.mean_block(), v.num_blocks()),
        }
    }
}

/// Cached minimizer data: `x_star`, `h_star = ∇f(x_star)` and `f(x_star)`.
#[derive(Debug, Clone)]
pub struct Reference {
    pub x_star: BlockVector,
    pub h_star: BlockVector,
    pub f_star: f64,
}

/// Smooth objective plus regularizer plus (optionally) its cached minimizer.
pub struct CompositeProblem {
    smooth: Box<dyn SmoothObjective>,
    reg: Regularizer,
    reference: Option<Reference>,
}

impl CompositeProblem {
    pub fn new(smooth: Box<dyn SmoothObjective>, reg: Regularizer) -> Self {
        CompositeProblem {
            smooth,
            reg,
            reference: None,
        }
    }

    pub fn num_hubs(&self) -> usize {
        self.smooth.num_hubs()
    }

    pub fn shard_size(&self) -> usize {
        self.smooth.shard_size()
    }

    pub fn block_dim(&self) -> usize {
        self.smooth.block_dim()
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    pub fn constants(&self) -> ProblemConstants {
        self.smooth.constants()
    }

    pub fn check_shape(&self, x: &BlockVector) -> Result<()> {
        if x.num_blocks() != self.num_hubs() || x.block_dim() != self.block_dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{}, got {}x{}",
                self.num_hubs(),
                self.block_dim(),
                x.num_blocks(),
                x.block_dim()
            )));
        }
        Ok(())
    }

    /// `f(x)` (smooth part only).
    pub fn value(&self, x: &BlockVector) -> f64 {
        let m_hubs = self.num_hubs();
        let sum: f64 = (0..m_hubs)
            .map(|i| self.smooth.hub_value(i, x.block(i)))
            .sum();
        sum / m_hubs as f64
    }

    /// `∇f(x)`: block `i` is `(1/M) ∇φ_i(x_i)`.
    pub fn gradient(&self, x: &BlockVector) -> BlockVector {
        let m_hubs = self.num_hubs();
        let scale = 1.0 / m_hubs as f64;
        BlockVector::new(
            (0..m_hubs)
                .map(|i| self.smooth.hub_gradient(i, x.block(i)).scale(scale))
                .collect(),
        )
    }

    /// `∇φ̃_j(x)`: block `i` is `(1/M) ∇φ_ij(x_i)`.
    pub fn component_gradient(&self, j: usize, x: &BlockVector) -> BlockVector {
        let m_hubs = self.num_hubs();
        let scale = 1.0 / m_hubs as f64;
        BlockVector::new(
            (0..m_hubs)
                .map(|i| self.smooth.sample_gradient(i, j, x.block(i)).scale(scale))
                .collect(),
        )
    }

    pub fn sample_gradient(&self, i: usize, j: usize, v: &DenseVector) -> DenseVector {
        self.smooth.sample_gradient(i, j, v)
    }

    pub fn hub_gradient(&self, i: usize, v: &DenseVector) -> DenseVector {
        self.smooth.hub_gradient(i, v)
    }

    /// Bregman divergence `D_f(x, y) = f(x) - f(y) - <∇f(y), x - y>`.
    pub fn bregman(&self, x: &BlockVector, y: &BlockVector) -> Result<f64> {
        self.check_shape(x)?;
        self.check_shape(y)?;
        let grad_y = self.gradient(y);
        Ok(self.value(x) - self.value(y) - grad_y.dot(&x.sub(y)))
    }

    pub fn prox(&self, v: &BlockVector, step: f64) -> BlockVector {
        self.reg.prox(v, step)
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn require_reference(&self) -> Result<&Reference> {
        self.reference.as_ref().ok_or(Error::MissingMinimizer)
    }

    /// Installs a known minimizer (e.g. an analytic one) and derives
    /// `h_star = ∇f(x_star)` from it.
    pub fn set_reference(&mut self, x_star: BlockVector) -> Result<()> {
        self.check_shape(&x_star)?;
        let h_star = self.gradient(&x_star);
        let f_star = self.value(&x_star);
        self.reference = Some(Reference {
            x_star,
            h_star,
            f_star,
        });
        Ok(())
    }

    /// Solves for the minimizer with proximal gradient descent if not yet
    /// cached. `tol` bounds the prox-gradient residual `||x+ - x|| / γ`.
    pub fn ensure_reference(&mut self, tol: f64) -> Result<&Reference> {
        if self.reference.is_none() {
            let x_star = solve_reference(self, tol)?;
            self.set_reference(x_star)?;
        }
        Ok(self.reference.as_ref().unwrap())
    }
}

/// Measured/estimated `(L, L_max, μ)` of a composite problem's smooth part.
pub fn estimate_constants(problem: &CompositeProblem) -> ProblemConstants {
    problem.constants()
}

/// Builds the consensus lifting of a flat objective description: the smooth
/// part keeps weights `n_i / n = 1/M` (equal shards) and the regularizer
/// becomes the consensus indicator, so the lifted minimizer replicates the
/// flat one.
pub fn lift(smooth: Box<dyn SmoothObjective>) -> CompositeProblem {
    CompositeProblem::new(smooth, Regularizer::Consensus)
}
