//! `sweep-delta`: theoretical vs measured cost ratio across per-sample costs.

use proxskip_core::costmodel::{cost_proxskip, cost_proxskip_vr, cost_ratio};
use proxskip_core::error::{Error, Result};
use proxskip_core::estimators::{minibatch_smoothness, EstimatorKind};
use proxskip_core::problem::CompositeProblem;
use proxskip_core::solver::{run, theory_hyperparams, RunTrace, SolverConfig};

use crate::commands::{provenance, write_file};
use crate::config::ExperimentConfig;
use crate::exit_codes;

pub struct DeltaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl DeltaGrid {
    /// `δ = 0` (the free-computation limit) followed by a log-spaced grid.
    pub fn values(&self) -> Vec<f64> {
        let mut grid = vec![0.0];
        if self.points == 1 {
            grid.push(self.min);
            return grid;
        }
        let (a, b) = (self.min.log10(), self.max.log10());
        grid.extend(
            (0..self.points)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (self.points - 1) as f64)),
        );
        grid
    }
}

struct MeasuredRun {
    comms: f64,
    iters: f64,
    q: f64,
    converged: bool,
}

fn run_to_target(
    problem: &CompositeProblem,
    kind: &EstimatorKind,
    base: &ExperimentConfig,
    eps: f64,
) -> Result<MeasuredRun> {
    let hyper = theory_hyperparams(kind, problem)?;
    let config = SolverConfig {
        gamma: hyper.gamma,
        p: hyper.p,
        q: hyper.q,
        iters: base.iters,
        seed: base.seed,
        target: Some(eps),
    };
    let trace: RunTrace = run(problem, kind, &config)?;
    Ok(MeasuredRun {
        comms: trace.total_comms() as f64,
        iters: trace.iterations() as f64,
        q: hyper.q,
        converged: trace.converged_at.is_some(),
    })
}

pub fn cmd_sweep_delta(config: &ExperimentConfig, grid: &DeltaGrid) -> Result<i32> {
    let vr_kind = config.estimator_kind()?;
    if vr_kind == EstimatorKind::Gd {
        return Err(Error::InvalidInput(
            "sweep-delta compares the full-gradient method against a variance-reduced \
             estimator; pick sgd, lsvrg or hub"
                .into(),
        ));
    }
    let tau = vr_kind.tau().expect("non-gd estimators carry tau");
    let eps = config.eps.ok_or_else(|| {
        Error::InvalidInput("sweep-delta needs `eps`, the target Ψ ratio".into())
    })?;
    let (problem, _) = config.build_problem()?;
    let consts = problem.constants();
    let m = problem.shard_size();
    let l_tau = minibatch_smoothness(tau, m, consts.l, consts.l_max)?;

    // Both methods run once to the same target; the grid is pure accounting.
    let (baseline, reduced) = std::thread::scope(|scope| {
        let base_handle = scope.spawn(|| run_to_target(&problem, &EstimatorKind::Gd, config, eps));
        let vr_handle = scope.spawn(|| run_to_target(&problem, &vr_kind, config, eps));
        (
            base_handle.join().expect("baseline run panicked"),
            vr_handle.join().expect("variance-reduced run panicked"),
        )
    });
    let baseline = baseline?;
    let reduced = reduced?;
    let status = if baseline.converged && reduced.converged {
        "ok"
    } else {
        "no-converge"
    };

    let extra = vec![
        ("baseline_comms", format!("{}", baseline.comms)),
        ("baseline_iters", format!("{}", baseline.iters)),
        ("vr_comms", format!("{}", reduced.comms)),
        ("vr_iters", format!("{}", reduced.iters)),
        ("vr_q", format!("{}", reduced.q)),
        ("measured_L", format!("{}", consts.l)),
        ("measured_mu", format!("{}", consts.mu)),
        ("measured_L_tau", format!("{l_tau}")),
    ];
    let mut csv = provenance(config, &extra);
    csv.push_str("delta,ratio_theory,ratio_empirical,status\n");
    for delta in grid.values() {
        let theory = cost_ratio(delta, consts.mu, consts.l, l_tau, m as f64, tau as f64);
        let empirical = cost_proxskip(baseline.comms, baseline.iters, delta, m as f64)
            / cost_proxskip_vr(
                reduced.comms,
                reduced.iters,
                delta,
                m as f64,
                tau as f64,
                reduced.q,
            );
        csv.push_str(&format!("{delta},{theory},{empirical},{status}\n"));
    }
    write_file(&config.out.join("sweep.csv"), &csv)?;
    println!(
        "sweep-delta: {} grid points, status {status}, outputs in {}",
        grid.points,
        config.out.display()
    );
    Ok(exit_codes::SUCCESS)
}
