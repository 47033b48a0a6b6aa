//! Unbiased gradient estimators and their certified constants.
//!
//! Every estimator reports the six constants `(A, B, C, Ã, B̃, C̃)` of the
//! variance model
//!
//! ```text
//! E‖g - ∇f(x*)‖²   <=  2A D_f(x, x*) + B σ + C
//! E[σ⁺]            <=  2Ã D_f(x, x*) + B̃ σ + C̃
//! ```
//!
//! together with the control quantity `σ` where it has one. The solver
//! derives `W` and the contraction factor `β` from these.

mod compressor;
mod control;
mod gd;
mod sgd;
mod smoothness;

pub use compressor::{Compressor, CompressorSpec};
pub use control::ControlVariateEstimator;
pub use gd::GdEstimator;
pub use sgd::MinibatchSgd;
pub use smoothness::{minibatch_second_moment, minibatch_smoothness};

use crate::error::{Error, Result};
use crate::linalg::BlockVector;
use crate::problem::CompositeProblem;
use crate::rng::Rng;

/// The gradient estimator families the solver knows how to drive.
///
/// The control-update probability `q` is a solver hyperparameter and lives in
/// the solver config, not here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Exact gradient.
    Gd,
    /// Fresh uniform minibatch of size `tau` per hub, no control state.
    Sgd { tau: usize },
    /// Loopless control-variate estimator; sampling only.
    Lsvrg { tau: usize },
    /// Control-variate estimator with per-client compression on top of
    /// sampling.
    Hub {
        tau: usize,
        compressor: CompressorSpec,
    },
}

impl EstimatorKind {
    pub fn has_control(&self) -> bool {
        matches!(self, EstimatorKind::Lsvrg { .. } | EstimatorKind::Hub { .. })
    }

    pub fn tau(&self) -> Option<usize> {
        match self {
            EstimatorKind::Gd => None,
            EstimatorKind::Sgd { tau }
            | EstimatorKind::Lsvrg { tau }
            | EstimatorKind::Hub { tau, .. } => Some(*tau),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Gd => "gd",
            EstimatorKind::Sgd { .. } => "sgd",
            EstimatorKind::Lsvrg { .. } => "lsvrg",
            EstimatorKind::Hub { .. } => "hub",
        }
    }
}

/// The six constants of the variance model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c_tilde: f64,
}

impl EstimatorParams {
    pub fn deterministic(a: f64) -> Self {
        EstimatorParams {
            a,
            b: 0.0,
            c: 0.0,
            a_tilde: 0.0,
            b_tilde: 0.0,
            c_tilde: 0.0,
        }
    }

    /// `(W, β)`: with `B > 0`, `W = 2B/(1 - B̃)` and `β = (B + W B̃)/W`;
    /// with `B = 0`, `W = 0` and `β = B̃`. Requires `B̃ < 1`.
    pub fn w_beta(&self) -> Result<(f64, f64)> {
        if self.b_tilde >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "contraction needs B̃ < 1, got {}",
                self.b_tilde
            )));
        }
        if self.b > 0.0 {
            let w = 2.0 * self.b / (1.0 - self.b_tilde);
            let beta = (self.b + w * self.b_tilde) / w;
            Ok((w, beta))
        } else {
            Ok((0.0, self.b_tilde))
        }
    }
}

/// Free-function alias matching the constants-derivation contract.
pub fn derive_w_beta(params: &EstimatorParams) -> Result<(f64, f64)> {
    params.w_beta()
}

/// Declared constants of an estimator family on a given problem, as a pure
/// function of the control probability `q` (ignored by `gd`/`sgd`).
///
/// `sgd`'s `C = 2 Var(g(x*, ξ))` is a measured quantity and reported as zero
/// here; fill it with [`MinibatchSgd::variance_at_optimum`] when a bound
/// actually needs it.
pub fn declared_params(
    kind: &EstimatorKind,
    problem: &CompositeProblem,
    q: f64,
) -> Result<EstimatorParams> {
    let consts = problem.constants();
    let m = problem.shard_size();
    match kind {
        EstimatorKind::Gd => Ok(EstimatorParams::deterministic(consts.l)),
        EstimatorKind::Sgd { tau } => {
            let l_tau = minibatch_smoothness(*tau, m, consts.l, consts.l_max)?;
            Ok(EstimatorParams::deterministic(2.0 * l_tau))
        }
        EstimatorKind::Lsvrg { tau } => control_params(*tau, m, q, 0.0, &consts),
        EstimatorKind::Hub { tau, compressor } => {
            let omega = compressor.omega(problem.block_dim())?;
            control_params(*tau, m, q, omega, &consts)
        }
    }
}

fn control_params(
    tau: usize,
    m: usize,
    q: f64,
    omega: f64,
    consts: &crate::problem::ProblemConstants,
) -> Result<EstimatorParams> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "control probability q must lie in (0, 1], got {q}"
        )));
    }
    let l_tau = minibatch_smoothness(tau, m, consts.l, consts.l_max)?;
    if omega == 0.0 {
        // Uncompressed case: the refined sampling-only analysis applies.
        Ok(EstimatorParams {
            a: 2.0 * l_tau,
            b: 2.0,
            c: 0.0,
            a_tilde: q * l_tau,
            b_tilde: 1.0 - q,
            c_tilde: 0.0,
        })
    } else {
        Ok(EstimatorParams {
            a: 4.0 * (l_tau + omega / tau as f64 * consts.l_max),
            b: 4.0 * (1.0 + omega / tau as f64),
            c: 0.0,
            a_tilde: q * consts.l_max,
            b_tilde: 1.0 - q,
            c_tilde: 0.0,
        })
    }
}

/// A stateful gradient estimator attached to one run.
///
/// `estimate` consumes the sampling and compression randomness and leaves the
/// control state untouched; `post_step_update` flips the control coin (after
/// the prox coin, per the solver's draw-order contract) and refreshes the
/// control vector. `charged_evals` drains the per-hub component-gradient
/// charge accumulated by the accounting model.
pub trait GradientEstimator {
    fn kind(&self) -> EstimatorKind;

    /// Must be called once with the initial iterate before stepping.
    fn init(&mut self, problem: &CompositeProblem, x0: &BlockVector) -> Result<()>;

    fn estimate(
        &mut self,
        problem: &CompositeProblem,
        x: &BlockVector,
        rng: &mut Rng,
    ) -> Result<BlockVector>;

    /// Control update with the pre-step iterate; returns whether the control
    /// vector was refreshed. No-op (and no draw) for memoryless estimators.
    fn post_step_update(
        &mut self,
        _problem: &CompositeProblem,
        _x_pre: &BlockVector,
        _rng: &mut Rng,
    ) -> Result<bool> {
        Ok(false)
    }

    fn params(&self, problem: &CompositeProblem) -> Result<EstimatorParams>;

    /// Current `σ_t` (zero for memoryless estimators).
    fn sigma(&self) -> f64 {
        0.0
    }

    /// `σ(v)` evaluated at an arbitrary point, for analytic recursion checks.
    fn sigma_at(&self, _problem: &CompositeProblem, _v: &BlockVector) -> Result<f64> {
        Ok(0.0)
    }

    /// Current control point `y_t`, when the estimator maintains one.
    fn control_point(&self) -> Option<&BlockVector> {
        None
    }

    /// Drains the accumulated per-hub gradient-evaluation charge.
    fn drain_charge(&mut self) -> u64;
}

/// Instantiates the estimator for a run. `q` is the control-update
/// probability (ignored without control state).
pub fn build_estimator(
    kind: &EstimatorKind,
    problem: &CompositeProblem,
    q: f64,
) -> Result<Box<dyn GradientEstimator>> {
    match kind {
        EstimatorKind::Gd => Ok(Box::new(GdEstimator::new())),
        EstimatorKind::Sgd { tau } => Ok(Box::new(MinibatchSgd::new(*tau, problem)?)),
        EstimatorKind::Lsvrg { tau } => Ok(Box::new(ControlVariateEstimator::new(
            EstimatorKind::Lsvrg { tau: *tau },
            *tau,
            q,
            Compressor::identity(),
            problem,
        )?)),
        EstimatorKind::Hub { tau, compressor } => {
            let comp = Compressor::new(*compressor, problem.block_dim())?;
            Ok(Box::new(ControlVariateEstimator::new(
                EstimatorKind::Hub {
                    tau: *tau,
                    compressor: *compressor,
                },
                *tau,
                q,
                comp,
                problem,
            )?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_beta_of_memoryless_params_is_zero_zero() {
        let p = EstimatorParams::deterministic(10.0);
        assert_eq!(p.w_beta().unwrap(), (0.0, 0.0));
    }

    #[test]
    fn w_beta_matches_hand_computation() {
        // B = 2, B̃ = 1 - q with q = 0.5: W = 8, β = (2 + 8·0.5)/8 = 0.75.
        let p = EstimatorParams {
            a: 1.0,
            b: 2.0,
            c: 0.0,
            a_tilde: 0.5,
            b_tilde: 0.5,
            c_tilde: 0.0,
        };
        let (w, beta) = p.w_beta().unwrap();
        assert_eq!(w, 8.0);
        assert_eq!(beta, 0.75);
    }

    #[test]
    fn compressed_control_contraction_is_one_minus_half_q() {
        // B = 4(1 + ω/τ), B̃ = 1 - q  =>  β = 1 - q/2 for any ω, τ.
        for &(omega, tau, q) in &[(1.0, 4.0, 0.3), (4.0, 2.0, 0.05), (0.5, 16.0, 1.0)] {
            let p = EstimatorParams {
                a: 0.0,
                b: 4.0 * (1.0 + omega / tau),
                c: 0.0,
                a_tilde: 0.0,
                b_tilde: 1.0 - q,
                c_tilde: 0.0,
            };
            let (_, beta) = p.w_beta().unwrap();
            assert!(
                (beta - (1.0 - q / 2.0)).abs() < 1e-12,
                "omega {omega} tau {tau} q {q}: beta {beta}"
            );
        }
    }

    #[test]
    fn w_beta_rejects_non_contracting_recursion() {
        let p = EstimatorParams {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            a_tilde: 0.0,
            b_tilde: 1.0,
            c_tilde: 0.0,
        };
        assert!(p.w_beta().is_err());
    }
}
