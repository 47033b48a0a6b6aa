//! Local gradient descent baseline: local steps, then averaging.

use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::problem::CompositeProblem;
use crate::solver::{RunTrace, TraceRecord};

/// Each round, every hub takes `steps_per_round` gradient steps on its own
/// local objective `φ_i` with stepsize `gamma`, after which the blocks are
/// averaged (one communication). One trace row per round; the `psi` column
/// carries the squared distance (there is no gradient shift here).
pub fn localgd_baseline(
    problem: &CompositeProblem,
    steps_per_round: usize,
    rounds: usize,
    gamma: f64,
    x0: BlockVector,
) -> Result<RunTrace> {
    if steps_per_round == 0 || rounds == 0 {
        return Err(Error::InvalidInput(
            "steps-per-round and rounds must be >= 1".into(),
        ));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("stepsize {gamma} must be positive")));
    }
    problem.check_shape(&x0)?;
    let reference = problem.require_reference()?;
    let m = problem.shard_size() as u64;

    let mut trace = RunTrace::default();
    let mut x = x0;
    let mut evals = 0u64;
    let record = |x: &BlockVector, round: usize, comms: u64, evals: u64| TraceRecord {
        iter: round,
        comms,
        grad_evals: evals,
        dist_sq: x.dist_sq(&reference.x_star),
        psi: x.dist_sq(&reference.x_star),
        f_gap: problem.value(x) - reference.f_star,
        theta: round > 0,
        y_updated: false,
    };
    trace.records.push(record(&x, 0, 0, 0));

    for round in 1..=rounds {
        for _ in 0..steps_per_round {
            let blocks = (0..problem.num_hubs())
                .map(|i| {
                    x.block(i)
                        .add_scaled(&problem.hub_gradient(i, x.block(i)), -gamma)
                })
                .collect();
            x = BlockVector::new(blocks);
            evals += m;
        }
        x = BlockVector::replicate(&x.mean_block(), problem.num_hubs());
        if !x.is_finite() {
            return Err(Error::Divergence {
                iter: round,
                trace: Box::new(trace),
            });
        }
        trace.records.push(record(&x, round, round as u64, evals));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseVector;
    use crate::problem::{QuadraticObjective, Regularizer};

    fn two_client_quadratic(d1: f64, c1: f64, d2: f64, c2: f64) -> CompositeProblem {
        let q = QuadraticObjective::per_hub(
            vec![DenseVector::new(vec![d1]), DenseVector::new(vec![d2])],
            vec![DenseVector::new(vec![c1]), DenseVector::new(vec![c2])],
        )
        .unwrap();
        let x_star = q.consensus_minimizer();
        let mut p = CompositeProblem::new(Box::new(q), Regularizer::Consensus);
        p.set_reference(x_star).unwrap();
        p
    }

    #[test]
    fn single_local_step_equals_gd_on_the_average() {
        let p = two_client_quadratic(2.0, 1.0, 1.0, -3.0);
        let gamma = 0.2;
        let x0 = BlockVector::zeros(2, 1);
        let trace = localgd_baseline(&p, 1, 30, gamma, x0).unwrap();
        // Flat reference: z ← z - γ ∇φ̄(z), φ̄ = ½(φ_1 + φ_2). Both blocks
        // agree after averaging, so the per-block distance is √(dist²/2).
        let mut z = 0.0f64;
        for r in trace.records.iter().skip(1) {
            let grad = 0.5 * (2.0 * (z - 1.0) + 1.0 * (z + 3.0));
            z -= gamma * grad;
            let per_block = (r.dist_sq / 2.0).sqrt();
            assert!(
                (per_block - (z - (-1.0 / 3.0)).abs()).abs() < 1e-12,
                "round {} disagrees with flat gd",
                r.iter
            );
        }
    }

    #[test]
    fn homogeneous_clients_make_averaging_a_no_op() {
        let q = QuadraticObjective::per_hub(
            vec![DenseVector::new(vec![2.0]); 3],
            vec![DenseVector::new(vec![1.5]); 3],
        )
        .unwrap();
        let x_star = q.consensus_minimizer();
        let mut p = CompositeProblem::new(Box::new(q), Regularizer::Consensus);
        p.set_reference(x_star).unwrap();
        let trace = localgd_baseline(&p, 5, 20, 0.1, BlockVector::zeros(3, 1)).unwrap();
        // Identical shards converge to the shared center.
        assert!(trace.last().dist_sq < 1e-12);
    }

    #[test]
    fn heterogeneous_clients_stall_at_the_drift_fixed_point() {
        // Local maps x_i ← (1-γ d_i)^k x_i + c_i (1 - (1-γ d_i)^k); the
        // averaged iteration has fixed point mean(b_i) / (1 - mean(a_i)),
        // which differs from the true optimum when k > 1 and d_1 ≠ d_2.
        let (d1, c1, d2, c2) = (2.0, 1.0, 0.5, -3.0);
        let p = two_client_quadratic(d1, c1, d2, c2);
        let (gamma, k) = (0.2, 4usize);
        let a1 = (1.0 - gamma * d1).powi(k as i32);
        let a2 = (1.0 - gamma * d2).powi(k as i32);
        let b1 = c1 * (1.0 - a1);
        let b2 = c2 * (1.0 - a2);
        let fixed = 0.5 * (b1 + b2) / (1.0 - 0.5 * (a1 + a2));
        let x_star = p.require_reference().unwrap().x_star.block(0).entries()[0];
        assert!(
            (fixed - x_star).abs() > 1e-2,
            "fixed point must differ from the optimum for this setup"
        );
        let trace = localgd_baseline(&p, k, 400, gamma, BlockVector::zeros(2, 1)).unwrap();
        let per_block = (trace.last().dist_sq / 2.0).sqrt();
        let reached = x_star + per_block * (fixed - x_star).signum();
        assert!(
            (reached - fixed).abs() <= 1e-9 + 1e-9 * fixed.abs(),
            "converged to {reached}, analytic fixed point {fixed}"
        );
    }
}
