//! The communication-skipping iteration engine.
//!
//! One step, in order:
//!
//! 1. `g_t` from the gradient estimator (subset draws, then compressor draws);
//! 2. `x̂ = x_t - γ (g_t - h_t)`;
//! 3. prox coin `θ ~ Bernoulli(p)`; if it fires,
//!    `x_{t+1} = prox_{(γ/p) r}(x̂ - (γ/p) h_t)`, else `x_{t+1} = x̂`;
//! 4. `h_{t+1} = h_t + (p/γ)(x_{t+1} - x̂)`;
//! 5. the estimator's control coin (probability `q`), refreshing `y` to the
//!    pre-step iterate `x_t`.
//!
//! Communication happens exactly when the prox fires, so the trace's `comms`
//! column counts prox applications.

mod localgd;
mod trace;

pub use localgd::localgd_baseline;
pub use trace::{RunTrace, TraceRecord};

use crate::error::{Error, Result};
use crate::estimators::{build_estimator, declared_params, EstimatorKind, GradientEstimator};
use crate::linalg::BlockVector;
use crate::problem::CompositeProblem;
use crate::rng::Rng;

/// Run-level configuration. `gamma`, `p`, `q` are the resolved hyperparameters
/// (use [`theory_hyperparams`] for the theory-prescribed values); `q` is
/// ignored by estimators without control state.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
    pub iters: usize,
    pub seed: u64,
    /// Stop once `Ψ_t / Ψ_0` falls to this ratio.
    pub target: Option<f64>,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("stepsize {} must be positive", self.gamma)));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::InvalidInput(format!("prox probability {} outside (0, 1]", self.p)));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidInput(format!("control probability {} outside (0, 1]", self.q)));
        }
        if self.iters == 0 {
            return Err(Error::InvalidInput("iteration budget must be >= 1".into()));
        }
        if let Some(eps) = self.target {
            if !(eps > 0.0) {
                return Err(Error::InvalidInput(format!("target ratio {eps} must be positive")));
            }
        }
        Ok(())
    }
}

/// Iterate and gradient shift.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: BlockVector,
    pub h: BlockVector,
    pub t: usize,
}

impl SolverState {
    /// Starts with `h_0 = 0`.
    pub fn new(x0: BlockVector) -> Self {
        let h = BlockVector::zeros(x0.num_blocks(), x0.block_dim());
        SolverState { x: x0, h, t: 0 }
    }
}

/// What one step did.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub theta: bool,
    pub y_updated: bool,
}

/// The deterministic core of the update, with the gradient estimate and the
/// prox coin supplied externally. Exposed for oracles that average over the
/// coin analytically.
pub fn apply_update(
    x: &BlockVector,
    h: &BlockVector,
    g: &BlockVector,
    theta: bool,
    problem: &CompositeProblem,
    gamma: f64,
    p: f64,
) -> (BlockVector, BlockVector) {
    let x_hat = x.add_scaled(&g.sub(h), -gamma);
    let x_next = if theta {
        let step = gamma / p;
        problem.prox(&x_hat.add_scaled(h, -step), step)
    } else {
        x_hat.clone()
    };
    let mut h_next = h.clone();
    h_next.axpy(p / gamma, &x_next.sub(&x_hat));
    (x_next, h_next)
}

/// One full iteration: estimator randomness, then the prox coin, then the
/// estimator's control coin.
pub fn proxskip_vr_step(
    state: &mut SolverState,
    problem: &CompositeProblem,
    estimator: &mut dyn GradientEstimator,
    config: &SolverConfig,
    rng: &mut Rng,
) -> Result<StepOutcome> {
    let g = estimator.estimate(problem, &state.x, rng)?;
    let theta = rng.bernoulli(config.p)?;
    let (x_next, h_next) = apply_update(
        &state.x,
        &state.h,
        &g,
        theta,
        problem,
        config.gamma,
        config.p,
    );
    let y_updated = estimator.post_step_update(problem, &state.x, rng)?;
    state.x = x_next;
    state.h = h_next;
    state.t += 1;
    Ok(StepOutcome { theta, y_updated })
}

/// Lyapunov function
/// `Ψ = ‖x - x*‖² + (γ²/p²)‖h - h*‖² + γ² W σ`.
pub fn lyapunov(
    problem: &CompositeProblem,
    x: &BlockVector,
    h: &BlockVector,
    sigma: f64,
    gamma: f64,
    p: f64,
    w: f64,
) -> Result<f64> {
    let reference = problem.require_reference()?;
    Ok(x.dist_sq(&reference.x_star)
        + gamma * gamma / (p * p) * h.dist_sq(&reference.h_star)
        + gamma * gamma * w * sigma)
}

/// Upper bound on `E[Ψ_T]`:
/// `max{(1-γμ)^T, β^T, (1-p²)^T} Ψ_0 + (C + W C̃) γ² / min{γμ, p², 1-β}`.
pub fn theoretical_bound(
    psi0: f64,
    gamma: f64,
    mu: f64,
    p: f64,
    beta: f64,
    c: f64,
    c_tilde: f64,
    w: f64,
    t: usize,
) -> Result<f64> {
    let gm = gamma * mu;
    if !(gm > 0.0 && gm <= 1.0) || !(p > 0.0 && p <= 1.0) || !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParams(format!(
            "bound needs γμ ∈ (0,1], p ∈ (0,1], β ∈ [0,1); got γμ={gm}, p={p}, β={beta}"
        )));
    }
    let denom = gm.min(p * p).min(1.0 - beta);
    if denom <= 0.0 {
        return Err(Error::InvalidParams("no contraction: min{γμ, p², 1-β} = 0".into()));
    }
    let ti = t as i32;
    let contraction = (1.0 - gm)
        .powi(ti)
        .max(beta.powi(ti))
        .max((1.0 - p * p).powi(ti));
    Ok(contraction * psi0 + (c + w * c_tilde) * gamma * gamma / denom)
}

/// Theory-prescribed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
}

/// `γ = min{1/μ, 1/(A + W Ã)}`, `p = √(γμ)`, and for control estimators
/// `q = min(1, 2γμ)`.
///
/// The constants of a control estimator contain `q` while the rule for `q`
/// contains `γ`, so the pair is solved as a damped fixed point from `q = 1`.
/// With `W = 2B/(1 - B̃)` the product `W Ã` is independent of `q`, so the
/// iteration lands on the exact fixed point and the final assignment
/// `q = min(1, 2γμ)` is self-consistent.
pub fn theory_hyperparams(
    kind: &EstimatorKind,
    problem: &CompositeProblem,
) -> Result<Hyperparams> {
    let mu = problem.constants().mu;
    if !(mu > 0.0) {
        return Err(Error::InvalidProblem(format!("need μ > 0, got {mu}")));
    }
    let gamma_for = |q: f64| -> Result<f64> {
        let params = declared_params(kind, problem, q)?;
        let (w, _) = params.w_beta()?;
        let denom = params.a + w * params.a_tilde;
        if !(denom > 0.0) {
            return Err(Error::InvalidParams(
                "A + W·Ã = 0: no smoothness information".into(),
            ));
        }
        Ok((1.0 / mu).min(1.0 / denom))
    };
    if !kind.has_control() {
        let gamma = gamma_for(1.0)?;
        return Ok(Hyperparams {
            gamma,
            p: (gamma * mu).sqrt(),
            q: 1.0,
        });
    }
    let mut q = 1.0;
    for _ in 0..20 {
        let gamma = gamma_for(q)?;
        let q_new = (2.0 * gamma * mu).min(1.0);
        q = 0.5 * q + 0.5 * q_new;
    }
    let gamma = gamma_for(q)?;
    let q = (2.0 * gamma * mu).min(1.0);
    debug_assert!((gamma_for(q)? - gamma).abs() <= 1e-12 * gamma);
    Ok(Hyperparams {
        gamma,
        p: (gamma * mu).sqrt(),
        q,
    })
}

/// Runs the method from the origin. See [`run_from`].
pub fn run(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    config: &SolverConfig,
) -> Result<RunTrace> {
    let x0 = BlockVector::zeros(problem.num_hubs(), problem.block_dim());
    run_from(problem, kind, config, x0)
}

/// Runs the method for `config.iters` steps or until `Ψ_t/Ψ_0` reaches the
/// target ratio. Deterministic given the seed; requires a cached minimizer
/// for the Ψ and distance columns.
pub fn run_from(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    config: &SolverConfig,
    x0: BlockVector,
) -> Result<RunTrace> {
    config.validate()?;
    problem.check_shape(&x0)?;
    let reference = problem.require_reference()?;
    let f_star = reference.f_star;

    let params = declared_params(kind, problem, config.q)?;
    let (w, _) = params.w_beta()?;
    let mut estimator = build_estimator(kind, problem, config.q)?;
    estimator.init(problem, &x0)?;

    let mut trace = RunTrace {
        seed: config.seed,
        ..RunTrace::default()
    };
    let consts = problem.constants();
    let gamma_cap = (1.0 / consts.mu).min(1.0 / (params.a + w * params.a_tilde));
    if config.gamma > gamma_cap * (1.0 + 1e-12) {
        trace.warnings.push(format!(
            "stepsize {} exceeds the certified bound {}; running anyway",
            config.gamma, gamma_cap
        ));
    }

    let mut state = SolverState::new(x0);
    let mut rng = Rng::new(config.seed);
    let mut comms = 0u64;
    let mut evals = 0u64;

    let record = |state: &SolverState,
                  sigma: f64,
                  comms: u64,
                  evals: u64,
                  outcome: Option<StepOutcome>|
     -> Result<TraceRecord> {
        let psi = lyapunov(problem, &state.x, &state.h, sigma, config.gamma, config.p, w)?;
        Ok(TraceRecord {
            iter: state.t,
            comms,
            grad_evals: evals,
            dist_sq: state.x.dist_sq(&reference.x_star),
            psi,
            f_gap: problem.value(&state.x) - f_star,
            theta: outcome.map(|o| o.theta).unwrap_or(false),
            y_updated: outcome.map(|o| o.y_updated).unwrap_or(false),
        })
    };

    trace
        .records
        .push(record(&state, estimator.sigma(), comms, evals, None)?);
    let psi0 = trace.psi0();

    for _ in 0..config.iters {
        let outcome = proxskip_vr_step(&mut state, problem, estimator.as_mut(), config, &mut rng)?;
        comms += u64::from(outcome.theta);
        evals += estimator.drain_charge();
        if !state.x.is_finite() || !state.h.is_finite() {
            return Err(Error::Divergence {
                iter: state.t,
                trace: Box::new(trace),
            });
        }
        trace
            .records
            .push(record(&state, estimator.sigma(), comms, evals, Some(outcome))?);
        if let Some(eps) = config.target {
            if psi0 > 0.0 && trace.last().psi / psi0 <= eps {
                trace.converged_at = Some(state.t);
                break;
            }
        }
    }
    Ok(trace)
}
