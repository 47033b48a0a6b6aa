//! Experiment harness for the communication-skipping optimization simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use proxskip_core::error::Error;

use crate::commands::gendata::cmd_gen_data;
use crate::commands::plot::cmd_plot;
use crate::commands::run::cmd_run;
use crate::commands::sweep::{cmd_sweep_delta, DeltaGrid};
use crate::commands::verify::cmd_verify;
use crate::config::ExperimentConfig;

/// Process exit codes, one per failure class.
pub mod exit_codes {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
    pub const VERIFICATION_FAILURE: i32 = 5;
}

#[derive(Parser)]
#[command(
    name = "proxskip",
    version,
    about = "Deterministic simulator for communication-skipping federated optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One solver run; writes iterations.csv and meta.txt.
    Run(ConfigArgs),
    /// Cost-ratio study across per-sample compute costs; writes sweep.csv.
    SweepDelta(SweepArgs),
    /// Empirical certification suites; writes checks.csv.
    Verify(VerifyArgs),
    /// Emit a plot script plus data files from run/sweep CSVs.
    Plot(PlotArgs),
    /// Generate a seeded synthetic dataset in the cached format.
    GenData(GenDataArgs),
}

/// Experiment settings: an optional key-value config file, overridden by
/// (later-winning) flags. The default output directory comes from
/// `PROXSKIP_OUT_DIR` when set.
#[derive(Args)]
struct ConfigArgs {
    /// Key-value config file (one `key = value` per line).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synthetic` or a dataset path.
    #[arg(long)]
    data: Option<String>,
    /// Synthetic row count.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic feature dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Synthetic condition-number target.
    #[arg(long)]
    kappa: Option<f64>,
    /// Ridge weight (overrides --kappa; required for file datasets).
    #[arg(long)]
    lambda: Option<f64>,
    /// Worker/hub count M.
    #[arg(long)]
    hubs: Option<usize>,
    /// Minibatch size tau.
    #[arg(long)]
    tau: Option<usize>,
    /// gd | sgd | lsvrg | hub.
    #[arg(long)]
    estimator: Option<String>,
    /// identity | rand-k:<k>.
    #[arg(long)]
    compressor: Option<String>,
    /// theory | manual.
    #[arg(long)]
    hyper: Option<String>,
    /// Stepsize (manual mode).
    #[arg(long)]
    gamma: Option<f64>,
    /// Prox probability (manual mode).
    #[arg(long)]
    p: Option<f64>,
    /// Control-update probability (manual mode).
    #[arg(long)]
    q: Option<f64>,
    /// Iteration budget T.
    #[arg(long)]
    iters: Option<usize>,
    /// Stopping ratio on the Lyapunov value (`none` disables).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
            })?;
            cfg.apply_text(&text)?;
        }
        macro_rules! over {
            ($field:ident, $key:literal) => {
                if let Some(v) = &self.$field {
                    cfg.set($key, &v.to_string())?;
                }
            };
        }
        over!(data, "data");
        over!(n, "n");
        over!(dim, "dim");
        over!(kappa, "kappa");
        over!(lambda, "lambda");
        over!(hubs, "hubs");
        over!(tau, "tau");
        over!(estimator, "estimator");
        over!(compressor, "compressor");
        over!(hyper, "hyper");
        over!(gamma, "gamma");
        over!(p, "p");
        over!(q, "q");
        over!(iters, "iters");
        over!(eps, "eps");
        over!(seed, "seed");
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Smallest per-sample cost on the log grid.
    #[arg(long, default_value_t = 1e-7)]
    delta_min: f64,
    /// Largest per-sample cost on the log grid.
    #[arg(long, default_value_t = 1e-1)]
    delta_max: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 25)]
    delta_points: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// assumptions | prox-facts | theorem1 | all.
    suite: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per estimator check.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Run or sweep CSVs produced by this tool.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    /// Condition-number target for the suggested ridge weight.
    #[arg(long)]
    kappa: Option<f64>,
    /// Set the suggested ridge weight to this fraction of the smoothness
    /// constant (default 5e-4 when neither flag is given).
    #[arg(long)]
    lambda_frac: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } => exit_codes::PARSE,
        Error::Divergence { .. } => exit_codes::DIVERGENCE,
        Error::InvalidInput(_)
        | Error::InvalidProblem(_)
        | Error::InvalidParams(_)
        | Error::DimensionMismatch(_)
        | Error::MissingMinimizer => exit_codes::CONFIG,
        Error::NoConvergence(_) => exit_codes::OTHER,
    }
}

fn default_out() -> PathBuf {
    std::env::var(config::OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|_| PathBuf::from("proxskip-out"))
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run(args) => cmd_run(&args.resolve()?),
        Command::SweepDelta(args) => {
            let cfg = args.config.resolve()?;
            let grid = DeltaGrid {
                min: args.delta_min,
                max: args.delta_max,
                points: args.delta_points,
            };
            if !(grid.min > 0.0 && grid.max >= grid.min && grid.points >= 1) {
                return Err(Error::InvalidInput("bad delta grid".into()));
            }
            cmd_sweep_delta(&cfg, &grid)
        }
        Command::Verify(args) => {
            let out = args.out.unwrap_or_else(default_out);
            cmd_verify(&args.suite, args.seed, args.samples, &out)
        }
        Command::Plot(args) => {
            let out = args.out.unwrap_or_else(default_out);
            cmd_plot(&args.inputs, &out)
        }
        Command::GenData(args) => cmd_gen_data(
            args.n,
            args.dim,
            args.kappa,
            args.lambda_frac,
            args.seed,
            &args.out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
