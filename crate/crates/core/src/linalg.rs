//! Dense vectors and block (lifted) vectors.
//!
//! A [`BlockVector`] stores the consensus-form iterate: `M` blocks of
//! dimension `d'`, one block per worker/hub. Flat problems are the `M = 1`
//! special case, so the solver only ever manipulates block vectors.

/// Dense vector in `R^{d'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    entries: Vec<f64>,
}

impl DenseVector {
    pub fn new(entries: Vec<f64>) -> Self {
        DenseVector { entries }
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector {
            entries: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        DenseVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "sub: dimension mismatch");
        DenseVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> DenseVector {
        DenseVector::new(self.entries.iter().map(|a| a * c).collect())
    }

    /// `self + c * other`, allocating.
    pub fn add_scaled(&self, other: &DenseVector, c: f64) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "add_scaled: dimension mismatch");
        DenseVector::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + c * b)
                .collect(),
        )
    }

    /// `self += c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &DenseVector) {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for a in &mut self.entries {
            *a *= c;
        }
    }

    pub fn dist_sq(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dist_sq: dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Lifted iterate `x = (x_1, .., x_M)` in `R^{M d'}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    blocks: Vec<DenseVector>,
}

impl BlockVector {
    /// All blocks must share the same dimension.
    pub fn new(blocks: Vec<DenseVector>) -> Self {
        assert!(!blocks.is_empty(), "block vector needs at least one block");
        let d = blocks[0].dim();
        assert!(
            blocks.iter().all(|b| b.dim() == d),
            "blocks must share one dimension"
        );
        BlockVector { blocks }
    }

    pub fn zeros(num_blocks: usize, block_dim: usize) -> Self {
        BlockVector {
            blocks: vec![DenseVector::zeros(block_dim); num_blocks],
        }
    }

    /// `M` copies of one block (e.g. a consensus point).
    pub fn replicate(block: &DenseVector, num_blocks: usize) -> Self {
        assert!(num_blocks >= 1);
        BlockVector {
            blocks: vec![block.clone(); num_blocks],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn total_dim(&self) -> usize {
        self.num_blocks() * self.block_dim()
    }

    pub fn block(&self, i: usize) -> &DenseVector {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut DenseVector {
        &mut self.blocks[i]
    }

    pub fn blocks(&self) -> &[DenseVector] {
        &self.blocks
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.is_finite())
    }

    /// Unweighted mean of the blocks; the Euclidean projection onto the
    /// consensus set replicates this.
    pub fn mean_block(&self) -> DenseVector {
        let mut acc = DenseVector::zeros(self.block_dim());
        for b in &self.blocks {
            acc.axpy(1.0, b);
        }
        acc.scale_in_place(1.0 / self.num_blocks() as f64);
        acc
    }

    pub fn dot(&self, other: &BlockVector) -> f64 {
        self.same_shape(other, "dot");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_sq()).sum()
    }

    pub fn add(&self, other: &BlockVector) -> BlockVector {
        self.same_shape(other, "add");
        BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &BlockVector) -> BlockVector {
        self.same_shape(other, "sub");
        BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> BlockVector {
        BlockVector {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    pub fn add_scaled(&self, other: &BlockVector, c: f64) -> BlockVector {
        self.same_shape(other, "add_scaled");
        BlockVector {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.add_scaled(b, c))
                .collect(),
        }
    }

    pub fn axpy(&mut self, c: f64, other: &BlockVector) {
        self.same_shape(other, "axpy");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.axpy(c, b);
        }
    }

    pub fn dist_sq(&self, other: &BlockVector) -> f64 {
        self.same_shape(other, "dist_sq");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.dist_sq(b))
            .sum()
    }

    fn same_shape(&self, other: &BlockVector, op: &str) {
        assert!(
            self.num_blocks() == other.num_blocks() && self.block_dim() == other.block_dim(),
            "{op}: block shape mismatch ({}x{} vs {}x{})",
            self.num_blocks(),
            self.block_dim(),
            other.num_blocks(),
            other.block_dim()
        );
    }
}
