//! `verify`: empirical certification suites over built-in desk-scale
//! instances, with a CSV report table.

use proxskip_core::dataio::{generate_synthetic, partition, to_logistic, LambdaRule};
use proxskip_core::error::{Error, Result};
use proxskip_core::estimators::{CompressorSpec, EstimatorKind};
use proxskip_core::linalg::DenseVector;
use proxskip_core::problem::{CompositeProblem, QuadraticObjective, Regularizer};
use proxskip_core::rng::Rng;
use proxskip_core::solver::theory_hyperparams;
use proxskip_core::verify::{
    check_assumption4, check_minibatch_lemma, check_prox_facts, check_theorem1,
    check_unbiasedness, to_csv, BoundCheckConfig, CheckReport,
};

use crate::commands::write_file;
use crate::exit_codes;

const REFERENCE_TOL: f64 = 1e-12;

fn estimator_grid() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::Gd,
        EstimatorKind::Sgd { tau: 2 },
        EstimatorKind::Lsvrg { tau: 2 },
        EstimatorKind::Hub {
            tau: 2,
            compressor: CompressorSpec::RandK { k: 5 },
        },
        EstimatorKind::Hub {
            tau: 2,
            compressor: CompressorSpec::RandK { k: 2 },
        },
    ]
}

fn assumption_problem(seed: u64) -> Result<CompositeProblem> {
    let mut rng = Rng::new(seed);
    let (ds, lambda) = generate_synthetic(&mut rng, 24, 10, LambdaRule::KappaTarget(50.0))?;
    let part = partition(&ds, 3, &mut rng)?;
    let obj = to_logistic(&ds, &part, lambda)?;
    let mut problem = CompositeProblem::new(Box::new(obj), Regularizer::Consensus);
    problem.ensure_reference(REFERENCE_TOL)?;
    Ok(problem)
}

fn bound_problem(seed: u64) -> Result<CompositeProblem> {
    let mut rng = Rng::new(seed);
    let (ds, lambda) = generate_synthetic(&mut rng, 100, 8, LambdaRule::KappaTarget(100.0))?;
    let part = partition(&ds, 4, &mut rng)?;
    let obj = to_logistic(&ds, &part, lambda)?;
    let mut problem = CompositeProblem::new(Box::new(obj), Regularizer::Consensus);
    problem.ensure_reference(REFERENCE_TOL)?;
    Ok(problem)
}

fn plateau_problem(seed: u64) -> Result<CompositeProblem> {
    let mut rng = Rng::new(seed);
    let (hubs, m, dim) = (2, 10, 4);
    let mut diags = Vec::new();
    let mut centers = Vec::new();
    for _ in 0..(hubs * m) {
        diags.push(DenseVector::new(
            (0..dim)
                .map(|k| (0.9 + 0.2 * rng.uniform()) * 30f64.powf(k as f64 / (dim - 1) as f64))
                .collect(),
        ));
        centers.push(DenseVector::new(
            (0..dim).map(|_| 2.0 * rng.normal()).collect(),
        ));
    }
    let q = QuadraticObjective::new(diags, centers, hubs)?;
    let x_star = q.consensus_minimizer();
    let mut problem = CompositeProblem::new(Box::new(q), Regularizer::Consensus);
    problem.set_reference(x_star)?;
    Ok(problem)
}

fn suite_assumptions(seed: u64, samples: usize) -> Result<Vec<CheckReport>> {
    let problem = assumption_problem(seed)?;
    let mut reports = Vec::new();
    for kind in estimator_grid() {
        reports.push(check_unbiasedness(&problem, &kind, 6, samples, seed)?);
        reports.extend(check_assumption4(&problem, &kind, 10, samples, seed)?);
    }
    let m = problem.shard_size();
    reports.push(check_minibatch_lemma(
        &problem,
        &[1, 2, m.div_ceil(2), m],
        6,
        samples,
        seed,
    )?);
    Ok(reports)
}

fn suite_prox_facts(seed: u64) -> Vec<CheckReport> {
    let mut reports = check_prox_facts(Regularizer::Consensus, 4, 6, 10_000, seed);
    reports.extend(check_prox_facts(Regularizer::Zero, 4, 6, 10_000, seed + 1));
    reports
}

fn suite_theorem1(seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let problem = bound_problem(seed)?;
    let kind = EstimatorKind::Lsvrg { tau: 8 };
    let hyper = theory_hyperparams(&kind, &problem)?;
    let t_max = (6.0 / (hyper.gamma * problem.constants().mu)).ceil() as usize;
    let cfg = BoundCheckConfig::log_spaced(200, t_max, 3, seed);
    reports.push(check_theorem1(&problem, &kind, &cfg)?);

    let quad = plateau_problem(seed + 7)?;
    let sgd = EstimatorKind::Sgd { tau: 1 };
    let h2 = theory_hyperparams(&sgd, &quad)?;
    let t_plateau = (16.0 / (h2.gamma * quad.constants().mu)).ceil() as usize;
    let cfg2 = BoundCheckConfig::log_spaced(200, t_plateau, 3, seed + 8);
    reports.push(check_theorem1(&quad, &sgd, &cfg2)?);
    Ok(reports)
}

pub fn cmd_verify(
    suite: &str,
    seed: u64,
    samples: usize,
    out: &std::path::Path,
) -> Result<i32> {
    if samples < 1_000 {
        return Err(Error::InvalidInput(format!(
            "verification needs at least 10^3 samples, got {samples}"
        )));
    }
    let reports = match suite {
        "assumptions" => suite_assumptions(seed, samples)?,
        "prox-facts" => suite_prox_facts(seed),
        "theorem1" => suite_theorem1(seed)?,
        "all" => {
            let mut all = suite_assumptions(seed, samples)?;
            all.extend(suite_prox_facts(seed));
            all.extend(suite_theorem1(seed)?);
            all
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown suite `{other}` (expected assumptions|prox-facts|theorem1|all)"
            )))
        }
    };
    for r in &reports {
        println!("{}", r.to_line());
    }
    let mut csv = format!("# suite = {suite}\n# seed = {seed}\n# samples = {samples}\n");
    csv.push_str(&to_csv(&reports));
    write_file(&out.join("checks.csv"), &csv)?;
    let all_pass = reports.iter().all(|r| r.pass);
    println!(
        "verify: {}/{} checks passed, table in {}",
        reports.iter().filter(|r| r.pass).count(),
        reports.len(),
        out.join("checks.csv").display()
    );
    Ok(if all_pass {
        exit_codes::SUCCESS
    } else {
        exit_codes::VERIFICATION_FAILURE
    })
}
