//! High-accuracy minimizer oracle.

use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::problem::CompositeProblem;

const MAX_ITERS: usize = 10_000_000;

/// Proximal gradient descent with step `1/L` from the origin, run until the
/// prox-gradient residual `||x_{t+1} - x_t|| / γ` drops below `tol`.
pub fn solve_reference(problem: &CompositeProblem, tol: f64) -> Result<BlockVector> {
    let x0 = BlockVector::zeros(problem.num_hubs(), problem.block_dim());
    solve_reference_from(problem, x0, tol)
}

/// Same as [`solve_reference`] but from a caller-chosen start.
pub fn solve_reference_from(
    problem: &CompositeProblem,
    x0: BlockVector,
    tol: f64,
) -> Result<BlockVector> {
    problem.check_shape(&x0)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be > 0, got {tol}")));
    }
    let gamma = 1.0 / problem.constants().l;
    let mut x = x0;
    for _ in 0..MAX_ITERS {
        let g = problem.gradient(&x);
        let next = problem.prox(&x.add_scaled(&g, -gamma), gamma);
        let residual = next.dist_sq(&x).sqrt() / gamma;
        x = next;
        if residual <= tol {
            return Ok(x);
        }
        if !x.is_finite() {
            return Err(Error::InvalidProblem(
                "reference solve produced a non-finite iterate".into(),
            ));
        }
    }
    Err(Error::NoConvergence(MAX_ITERS))
}
