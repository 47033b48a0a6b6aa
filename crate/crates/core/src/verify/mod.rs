//! Empirical certification of the estimator variance model, the sampling
//! lemma, the basic prox/norm facts, and the convergence bound.
//!
//! Every check is deterministic given its seed and emits a machine-readable
//! [`CheckReport`]. Margins follow one convention: `margin = bound -
//! empirical`, a check passes iff `margin >= -slack`, and a failing check
//! pinpoints the first violating state.

mod report;

pub use report::{to_csv, CheckReport};

use crate::error::Result;
use crate::estimators::{
    build_estimator, declared_params, minibatch_smoothness, EstimatorKind, MinibatchSgd,
};
use crate::linalg::{BlockVector, DenseVector};
use crate::problem::{CompositeProblem, Regularizer};
use crate::rng::Rng;
use crate::solver::{
    lyapunov, proxskip_vr_step, theoretical_bound, theory_hyperparams, SolverConfig, SolverState,
};

/// Statistical slack conventions: means get 4 standard errors, second
/// moments 3; exact identities get a relative epsilon.
const MEAN_SIGMAS: f64 = 4.0;
const MOMENT_SIGMAS: f64 = 3.0;
const EXACT_REL: f64 = 1e-9;

struct MarginTracker {
    worst_margin: f64,
    worst_slack: f64,
    worst_score: f64,
    first_violation: Option<String>,
    observations: u64,
}

impl MarginTracker {
    fn new() -> Self {
        MarginTracker {
            worst_margin: f64::INFINITY,
            worst_slack: 0.0,
            worst_score: f64::INFINITY,
            first_violation: None,
            observations: 0,
        }
    }

    fn observe(&mut self, margin: f64, slack: f64, context: impl Fn() -> String) {
        self.observations += 1;
        let score = margin + slack;
        if score < self.worst_score {
            self.worst_score = score;
            self.worst_margin = margin;
            self.worst_slack = slack;
        }
        if score < 0.0 && self.first_violation.is_none() {
            self.first_violation = Some(format!(
                "first violation at {} (margin {margin:.3e}, slack {slack:.3e})",
                context()
            ));
        }
    }

    fn into_report(self, name: &str, samples: u64) -> CheckReport {
        let pass = self.worst_score >= 0.0;
        CheckReport {
            name: name.to_string(),
            samples,
            worst_margin: self.worst_margin,
            slack: self.worst_slack,
            pass,
            detail: self
                .first_violation
                .unwrap_or_else(|| format!("{} observations", self.observations)),
        }
    }
}

/// Test states for estimator checks: a short trajectory of the actual method
/// under theory hyperparameters, sampled every `stride` steps. Returns
/// `(x_t, y_t)` pairs (`y_t = x_t` for memoryless estimators, unused).
fn trajectory_states(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    n_states: usize,
    stride: usize,
    seed: u64,
) -> Result<Vec<(BlockVector, BlockVector)>> {
    let hyper = theory_hyperparams(kind, problem)?;
    let config = SolverConfig {
        gamma: hyper.gamma,
        p: hyper.p,
        q: hyper.q,
        iters: n_states * stride,
        seed,
        target: None,
    };
    let x0 = BlockVector::zeros(problem.num_hubs(), problem.block_dim());
    let mut estimator = build_estimator(kind, problem, hyper.q)?;
    estimator.init(problem, &x0)?;
    let mut state = SolverState::new(x0);
    let mut rng = Rng::new(seed);
    let mut states = Vec::with_capacity(n_states);
    for t in 0..(n_states * stride) {
        if t % stride == 0 && states.len() < n_states {
            let y = estimator
                .control_point()
                .cloned()
                .unwrap_or_else(|| state.x.clone());
            states.push((state.x.clone(), y));
        }
        proxskip_vr_step(&mut state, problem, estimator.as_mut(), &config, &mut rng)?;
    }
    Ok(states)
}

/// Unbiasedness: componentwise `|mean - ∇f(x)| <= 4·stderr` at every test
/// state. Exact estimators are checked with zero Monte Carlo noise.
pub fn check_unbiasedness(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    n_points: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let reference = problem.require_reference()?;
    let q = if kind.has_control() {
        theory_hyperparams(kind, problem)?.q
    } else {
        1.0
    };
    let states = trajectory_states(problem, kind, n_points, 3, seed)?;
    let mut tracker = MarginTracker::new();
    let mut rng = Rng::derive(seed, 0x11);
    let deterministic = matches!(kind, EstimatorKind::Gd);
    let samples = if deterministic { 1 } else { n_samples };
    for (state_idx, (x, y)) in states.iter().enumerate() {
        let grad = problem.gradient(x);
        let mut estimator = build_estimator(kind, problem, q)?;
        estimator.init(problem, y)?;
        let dims = problem.num_hubs() * problem.block_dim();
        let mut sum = vec![0.0; dims];
        let mut sum_sq = vec![0.0; dims];
        for _ in 0..samples {
            let g = estimator.estimate(problem, x, &mut rng)?;
            let mut c = 0;
            for b in g.blocks() {
                for &v in b.entries() {
                    sum[c] += v;
                    sum_sq[c] += v * v;
                    c += 1;
                }
            }
        }
        let mut c = 0;
        for (bi, b) in grad.blocks().iter().enumerate() {
            for (ki, &target) in b.entries().iter().enumerate() {
                let mean = sum[c] / samples as f64;
                let var = (sum_sq[c] / samples as f64 - mean * mean).max(0.0);
                let stderr = (var / samples as f64).sqrt();
                let margin = MEAN_SIGMAS * stderr - (mean - target).abs();
                let slack = EXACT_REL * target.abs().max(1.0);
                tracker.observe(margin, slack, || {
                    format!("state {state_idx}, block {bi}, coord {ki}")
                });
                c += 1;
            }
        }
        let _ = reference;
    }
    Ok(tracker.into_report(&format!("unbiasedness-{}", kind.label()), samples as u64))
}

/// Both inequalities of the variance model at trajectory states: the second
/// moment by Monte Carlo with 3-sigma slack, the control recursion with the
/// coin marginalized analytically.
pub fn check_assumption4(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    n_states: usize,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let reference = problem.require_reference()?;
    let h_star = reference.h_star.clone();
    let x_star = reference.x_star.clone();
    let q = if kind.has_control() {
        theory_hyperparams(kind, problem)?.q
    } else {
        1.0
    };
    let mut params = declared_params(kind, problem, q)?;
    let mut c_slack = 0.0;
    if let EstimatorKind::Sgd { tau } = kind {
        // The neighborhood constant is itself measured; its uncertainty is
        // folded into the slack.
        let mut rng = Rng::derive(seed, 0x22);
        let var =
            MinibatchSgd::variance_at_optimum(problem, *tau, n_samples, &mut rng)?;
        params.c = 2.0 * var;
        c_slack = 2.0 * MOMENT_SIGMAS * var / (n_samples as f64).sqrt();
    }

    let states = trajectory_states(problem, kind, n_states, 3, seed)?;
    let mut moment = MarginTracker::new();
    let mut recursion = MarginTracker::new();
    let mut rng = Rng::derive(seed, 0x33);
    let deterministic = matches!(kind, EstimatorKind::Gd);
    let samples = if deterministic { 1 } else { n_samples };
    for (state_idx, (x, y)) in states.iter().enumerate() {
        let d_f = problem.bregman(x, &x_star)?;
        let mut estimator = build_estimator(kind, problem, q)?;
        estimator.init(problem, y)?;
        let sigma_t = estimator.sigma();

        // E‖g - ∇f(x*)‖² <= 2A·D_f + B·σ + C.
        let bound = 2.0 * params.a * d_f + params.b * sigma_t + params.c;
        let (mean, stderr) = if deterministic {
            let g = estimator.estimate(problem, x, &mut rng)?;
            (g.dist_sq(&h_star), 0.0)
        } else {
            let mut acc = 0.0;
            let mut acc_sq = 0.0;
            for _ in 0..samples {
                let g = estimator.estimate(problem, x, &mut rng)?;
                let v = g.dist_sq(&h_star);
                acc += v;
                acc_sq += v * v;
            }
            let mean = acc / samples as f64;
            let var = (acc_sq / samples as f64 - mean * mean).max(0.0);
            (mean, (var / samples as f64).sqrt())
        };
        let slack = MOMENT_SIGMAS * stderr + c_slack + EXACT_REL * bound.abs().max(1.0);
        moment.observe(bound - mean, slack, || format!("state {state_idx}"));

        // E[σ⁺] = (1-q)σ + q·σ(x) <= 2Ã·D_f + B̃·σ + C̃, coin marginalized.
        let expected_next = if kind.has_control() {
            (1.0 - q) * sigma_t + q * estimator.sigma_at(problem, x)?
        } else {
            0.0
        };
        let bound_next = 2.0 * params.a_tilde * d_f + params.b_tilde * sigma_t + params.c_tilde;
        let slack_next = EXACT_REL * bound_next.abs().max(1.0);
        recursion.observe(bound_next - expected_next, slack_next, || {
            format!("state {state_idx}")
        });
    }
    Ok(vec![
        moment.into_report(&format!("moment-bound-{}", kind.label()), samples as u64),
        recursion.into_report(&format!("sigma-recursion-{}", kind.label()), n_states as u64),
    ])
}

/// Sampling lemma: the coupled moment `E‖g(x) - g(x*)‖²` of the τ-nice
/// estimator stays below `2 L(τ) D_f(x, x*)`, with `L(1) = L_max` and
/// `L(m) = L` exact.
pub fn check_minibatch_lemma(
    problem: &CompositeProblem,
    taus: &[usize],
    n_points: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let reference = problem.require_reference()?;
    let x_star = reference.x_star.clone();
    let consts = problem.constants();
    let hubs = problem.num_hubs();
    let m = problem.shard_size();
    let hub_scale = 1.0 / hubs as f64;
    let mut tracker = MarginTracker::new();
    let mut rng = Rng::derive(seed, 0x44);
    for &tau in taus {
        let l_tau = minibatch_smoothness(tau, m, consts.l, consts.l_max)?;
        for point_idx in 0..n_points {
            // Random state around the minimizer at assorted scales.
            let scale = 10f64.powf(-2.0 + 3.0 * rng.uniform());
            let x = perturb(&x_star, scale, &mut rng);
            let d_f = problem.bregman(&x, &x_star)?;
            let bound = 2.0 * l_tau * d_f;
            let mut acc = 0.0;
            let mut acc_sq = 0.0;
            for _ in 0..n_samples {
                // Coupled draw: the same per-hub subsets evaluate both points.
                let mut moment = 0.0;
                for i in 0..hubs {
                    let subset = rng.sample_subset(m, tau)?;
                    let mut diff = DenseVector::zeros(problem.block_dim());
                    for &j in &subset {
                        diff.axpy(1.0, &problem.sample_gradient(i, j, x.block(i)));
                        diff.axpy(-1.0, &problem.sample_gradient(i, j, x_star.block(i)));
                    }
                    diff.scale_in_place(hub_scale / tau as f64);
                    moment += diff.norm_sq();
                }
                acc += moment;
                acc_sq += moment * moment;
            }
            let mean = acc / n_samples as f64;
            let var = (acc_sq / n_samples as f64 - mean * mean).max(0.0);
            let slack =
                MOMENT_SIGMAS * (var / n_samples as f64).sqrt() + EXACT_REL * bound.max(1.0);
            tracker.observe(bound - mean, slack, || format!("tau {tau}, point {point_idx}"));
        }
    }
    Ok(tracker.into_report("minibatch-lemma", n_samples as u64))
}

/// Configuration for the convergence-bound check.
#[derive(Debug, Clone)]
pub struct BoundCheckConfig {
    pub n_seeds: usize,
    pub t_max: usize,
    /// Iteration checkpoints (log-spaced by default builders).
    pub checkpoints: Vec<usize>,
    pub seed: u64,
}

impl BoundCheckConfig {
    /// Log-spaced checkpoints up to `t_max`.
    pub fn log_spaced(n_seeds: usize, t_max: usize, per_decade: usize, seed: u64) -> Self {
        let mut checkpoints = Vec::new();
        let mut t = 1.0f64;
        while (t as usize) < t_max {
            let it = t as usize;
            if checkpoints.last() != Some(&it) {
                checkpoints.push(it);
            }
            t *= 10f64.powf(1.0 / per_decade as f64);
        }
        checkpoints.push(t_max);
        BoundCheckConfig {
            n_seeds,
            t_max,
            checkpoints,
            seed,
        }
    }
}

/// Lean trajectory probe: Ψ at the requested iterations only, skipping the
/// full trace machinery. Deterministic per seed.
fn psi_at_checkpoints(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    config: &SolverConfig,
    checkpoints: &[usize],
    w: f64,
) -> Result<Vec<f64>> {
    let x0 = BlockVector::zeros(problem.num_hubs(), problem.block_dim());
    let mut estimator = build_estimator(kind, problem, config.q)?;
    estimator.init(problem, &x0)?;
    let mut state = SolverState::new(x0);
    let mut rng = Rng::new(config.seed);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let t_max = *checkpoints.iter().max().unwrap_or(&0);
    for t in 0..=t_max {
        while next < checkpoints.len() && checkpoints[next] == t {
            out.push(lyapunov(
                problem,
                &state.x,
                &state.h,
                estimator.sigma(),
                config.gamma,
                config.p,
                w,
            )?);
            next += 1;
        }
        if t == t_max {
            break;
        }
        proxskip_vr_step(&mut state, problem, estimator.as_mut(), config, &mut rng)?;
    }
    Ok(out)
}

/// Convergence bound over seeds: at every checkpoint `T`, the seed-mean of
/// `Ψ_T` stays below `bound(T) · (1 + slack)` with
/// `slack = 4·std/(√seeds·bound) + 0.05`. Margins are relative to the bound.
/// Seeds are independent and fan out across threads.
pub fn check_theorem1(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    cfg: &BoundCheckConfig,
) -> Result<CheckReport> {
    let consts = problem.constants();
    let hyper = theory_hyperparams(kind, problem)?;
    let mut params = declared_params(kind, problem, hyper.q)?;
    if let EstimatorKind::Sgd { tau } = kind {
        let mut rng = Rng::derive(cfg.seed, 0x55);
        params.c =
            2.0 * MinibatchSgd::variance_at_optimum(problem, *tau, 100_000, &mut rng)?;
    }
    let (w, beta) = params.w_beta()?;

    let mut sorted_checkpoints = cfg.checkpoints.clone();
    sorted_checkpoints.push(0); // Ψ_0, the bound's anchor
    sorted_checkpoints.sort_unstable();
    sorted_checkpoints.dedup();
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
        .min(cfg.n_seeds.max(1));
    let per_seed: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|worker| {
                let checkpoints = &sorted_checkpoints;
                scope.spawn(move || {
                    let mut chunk = Vec::new();
                    let mut s = worker;
                    while s < cfg.n_seeds {
                        let config = SolverConfig {
                            gamma: hyper.gamma,
                            p: hyper.p,
                            q: hyper.q,
                            iters: cfg.t_max,
                            seed: Rng::derive(cfg.seed, s as u64).seed(),
                            target: None,
                        };
                        chunk.push(psi_at_checkpoints(problem, kind, &config, checkpoints, w));
                        s += threads;
                    }
                    chunk
                })
            })
            .collect();
        let mut chunks: Vec<Vec<Result<Vec<f64>>>> = handles
            .into_iter()
            .map(|h| h.join().expect("bound-check worker panicked"))
            .collect();
        // Re-interleave so the ordering is by seed index, not completion.
        let mut flat = Vec::with_capacity(cfg.n_seeds);
        for s in 0..cfg.n_seeds {
            flat.push(chunks[s % threads].remove(0));
        }
        flat
    });

    let mut psis: Vec<Vec<f64>> =
        vec![Vec::with_capacity(cfg.n_seeds); sorted_checkpoints.len()];
    for seed_psis in per_seed {
        let seed_psis = seed_psis?;
        for (ci, v) in seed_psis.into_iter().enumerate() {
            psis[ci].push(v);
        }
    }
    let psi0 = psis.first().and_then(|v| v.first()).copied().unwrap_or(0.0);

    let mut tracker = MarginTracker::new();
    for (ci, &ck) in sorted_checkpoints.iter().enumerate().skip(1) {
        let vals = &psis[ci];
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(0.0);
        let bound = theoretical_bound(
            psi0,
            hyper.gamma,
            consts.mu,
            hyper.p,
            beta,
            params.c,
            params.c_tilde,
            w,
            ck,
        )?;
        let slack = MEAN_SIGMAS * var.sqrt() / (n.sqrt() * bound) + 0.05;
        // Relative margin: pass iff mean <= bound (1 + slack).
        let margin = (bound - mean) / bound;
        tracker.observe(margin, slack, || format!("checkpoint T={ck}"));
    }
    Ok(tracker.into_report(
        &format!("theorem1-{}", kind.label()),
        (cfg.n_seeds * (sorted_checkpoints.len() - 1)) as u64,
    ))
}

/// Firm nonexpansiveness of the prox, the two-vector norm inequality, and
/// the averaged-norm convexity inequality at random inputs.
pub fn check_prox_facts(
    reg: Regularizer,
    hubs: usize,
    dim: usize,
    trials: usize,
    seed: u64,
) -> Vec<CheckReport> {
    let mut rng = Rng::derive(seed, 0x66);
    let mut firm = MarginTracker::new();
    let mut young = MarginTracker::new();
    let mut jensen = MarginTracker::new();
    for trial in 0..trials {
        let x = random_block(hubs, dim, 10.0, &mut rng);
        let y = if trial == 0 {
            x.clone() // equality case
        } else {
            random_block(hubs, dim, 10.0, &mut rng)
        };
        let step = 10f64.powf(-3.0 + 6.0 * rng.uniform());
        let px = reg.prox(&x, step);
        let py = reg.prox(&y, step);
        let lhs = px.dist_sq(&py) + x.sub(&px).dist_sq(&y.sub(&py));
        let rhs = x.dist_sq(&y);
        firm.observe(
            rhs - lhs,
            EXACT_REL * rhs.max(1.0),
            || format!("trial {trial}, step {step}"),
        );

        let a = random_block(hubs, dim, 5.0, &mut rng);
        let b = if trial == 1 {
            a.scale(-1.0) // ‖a + (-a)‖² = 0 <= 4‖a‖²
        } else {
            random_block(hubs, dim, 5.0, &mut rng)
        };
        let y_lhs = a.add(&b).norm_sq();
        let y_rhs = 2.0 * a.norm_sq() + 2.0 * b.norm_sq();
        young.observe(
            y_rhs - y_lhs,
            EXACT_REL * y_rhs.max(1.0),
            || format!("trial {trial}"),
        );

        let count = 2 + (rng.below(6) as usize);
        let vs: Vec<BlockVector> = (0..count)
            .map(|_| random_block(hubs, dim, 3.0, &mut rng))
            .collect();
        let mut mean = BlockVector::zeros(hubs, dim);
        for v in &vs {
            mean.axpy(1.0 / count as f64, v);
        }
        let j_lhs = mean.norm_sq();
        let j_rhs = vs.iter().map(|v| v.norm_sq()).sum::<f64>() / count as f64;
        jensen.observe(
            j_rhs - j_lhs,
            EXACT_REL * j_rhs.max(1.0),
            || format!("trial {trial}"),
        );
    }
    vec![
        firm.into_report(&format!("firm-nonexpansive-{reg:?}"), trials as u64),
        young.into_report("norm-sum-inequality", trials as u64),
        jensen.into_report("averaged-norm-inequality", trials as u64),
    ]
}

fn random_block(hubs: usize, dim: usize, scale: f64, rng: &mut Rng) -> BlockVector {
    BlockVector::new(
        (0..hubs)
            .map(|_| DenseVector::new((0..dim).map(|_| scale * rng.normal()).collect()))
            .collect(),
    )
}

fn perturb(x: &BlockVector, scale: f64, rng: &mut Rng) -> BlockVector {
    let noise = random_block(x.num_blocks(), x.block_dim(), scale, rng);
    x.add(&noise)
}
