//! Unbiased randomized compression operators.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::rng::Rng;

/// Compressor family, dimension-free description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompressorSpec {
    Identity,
    /// Keep `k` uniformly chosen coordinates scaled by `d'/k`, zero the rest.
    RandK { k: usize },
}

impl CompressorSpec {
    /// Variance parameter `ω` with `E‖Q(x) - x‖² <= ω‖x‖²`:
    /// `0` for identity, `d'/k - 1` for rand-k.
    pub fn omega(&self, dim: usize) -> Result<f64> {
        match self {
            CompressorSpec::Identity => Ok(0.0),
            CompressorSpec::RandK { k } => {
                if *k < 1 || *k > dim {
                    return Err(Error::InvalidInput(format!(
                        "rand-k needs 1 <= k <= {dim}, got {k}"
                    )));
                }
                Ok(dim as f64 / *k as f64 - 1.0)
            }
        }
    }
}

/// A compressor bound to a fixed dimension.
#[derive(Debug, Clone)]
pub struct Compressor {
    spec: CompressorSpec,
    dim: usize,
    omega: f64,
}

impl Compressor {
    pub fn new(spec: CompressorSpec, dim: usize) -> Result<Self> {
        let omega = spec.omega(dim)?;
        Ok(Compressor { spec, dim, omega })
    }

    pub fn identity() -> Self {
        Compressor {
            spec: CompressorSpec::Identity,
            dim: 0,
            omega: 0.0,
        }
    }

    pub fn spec(&self) -> CompressorSpec {
        self.spec
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Applies the compressor. The identity consumes no randomness; rand-k
    /// consumes exactly one subset draw.
    pub fn apply(&self, x: &DenseVector, rng: &mut Rng) -> Result<DenseVector> {
        match self.spec {
            CompressorSpec::Identity => Ok(x.clone()),
            CompressorSpec::RandK { k } => {
                if x.dim() != self.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "compressor built for dim {}, got {}",
                        self.dim,
                        x.dim()
                    )));
                }
                let kept = rng.sample_subset(self.dim, k)?;
                let scale = self.dim as f64 / k as f64;
                let mut out = DenseVector::zeros(self.dim);
                for c in kept {
                    out.entries_mut()[c] = x.entries()[c] * scale;
                }
                Ok(out)
            }
        }
    }
}
