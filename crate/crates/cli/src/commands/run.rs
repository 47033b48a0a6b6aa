//! `run`: one solver run, emitting `iterations.csv` and `meta.txt`.

use proxskip_core::error::{Error, Result};
use proxskip_core::estimators::{declared_params, minibatch_smoothness};
use proxskip_core::solver::{run, RunTrace, SolverConfig};

use crate::commands::{provenance, write_file};
use crate::config::ExperimentConfig;
use crate::exit_codes;

pub fn cmd_run(config: &ExperimentConfig) -> Result<i32> {
    let (problem, lambda) = config.build_problem()?;
    let kind = config.estimator_kind()?;
    let hyper = config.hyperparams(&problem)?;
    let consts = problem.constants();
    let l_tau = kind
        .tau()
        .map(|t| minibatch_smoothness(t, problem.shard_size(), consts.l, consts.l_max))
        .transpose()?;
    let solver_config = SolverConfig {
        gamma: hyper.gamma,
        p: hyper.p,
        q: hyper.q,
        iters: config.iters,
        seed: config.seed,
        target: config.eps,
    };
    // Validates the declared constants up front.
    declared_params(&kind, &problem, hyper.q)?.w_beta()?;

    let (trace, status) = match run(&problem, &kind, &solver_config) {
        Ok(trace) => (trace, "ok"),
        Err(Error::Divergence { trace, .. }) => (*trace, "diverged"),
        Err(e) => return Err(e),
    };

    let extra = resolved_pairs(&problem, lambda, &hyper, l_tau, &trace, status);
    let mut csv = provenance(config, &extra);
    csv.push_str(&trace.to_csv());
    write_file(&config.out.join("iterations.csv"), &csv)?;

    let mut meta = String::new();
    for (k, v) in &extra {
        meta.push_str(&format!("{k} = {v}\n"));
    }
    for w in &trace.warnings {
        meta.push_str(&format!("warning = {w}\n"));
    }
    meta.push_str("# resolved configuration\n");
    meta.push_str(&provenance(config, &[]));
    write_file(&config.out.join("meta.txt"), &meta)?;

    println!(
        "run: {} iterations, {} communications, status {status}, outputs in {}",
        trace.iterations(),
        trace.total_comms(),
        config.out.display()
    );
    Ok(if status == "ok" {
        exit_codes::SUCCESS
    } else {
        exit_codes::DIVERGENCE
    })
}

fn resolved_pairs(
    problem: &proxskip_core::problem::CompositeProblem,
    lambda: f64,
    hyper: &proxskip_core::solver::Hyperparams,
    l_tau: Option<f64>,
    trace: &RunTrace,
    status: &str,
) -> Vec<(&'static str, String)> {
    let consts = problem.constants();
    vec![
        ("status", status.to_string()),
        ("resolved_gamma", format!("{}", hyper.gamma)),
        ("resolved_p", format!("{}", hyper.p)),
        ("resolved_q", format!("{}", hyper.q)),
        ("measured_L", format!("{}", consts.l)),
        ("measured_L_max", format!("{}", consts.l_max)),
        ("measured_mu", format!("{}", consts.mu)),
        (
            "measured_L_tau",
            l_tau.map(|v| format!("{v}")).unwrap_or_else(|| "none".into()),
        ),
        ("resolved_lambda", format!("{lambda}")),
        ("shard_size", format!("{}", problem.shard_size())),
        ("iterations", format!("{}", trace.iterations())),
        ("total_comms", format!("{}", trace.total_comms())),
        ("total_grad_evals", format!("{}", trace.last().grad_evals)),
        (
            "converged_at",
            trace
                .converged_at
                .map(|t| format!("{t}"))
                .unwrap_or_else(|| "none".into()),
        ),
    ]
}
