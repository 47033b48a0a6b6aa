//! Experiment configuration: a flat key-value text format plus command-line
//! overrides (later wins). The text representation round-trips losslessly.

use std::fmt::Write as _;
use std::path::PathBuf;

use proxskip_core::dataio::{self, LambdaRule, Partition};
use proxskip_core::error::{Error, Result};
use proxskip_core::estimators::{CompressorSpec, EstimatorKind};
use proxskip_core::problem::{CompositeProblem, Regularizer};
use proxskip_core::rng::Rng;
use proxskip_core::solver::{theory_hyperparams, Hyperparams};

/// Prox-gradient residual tolerance for the cached minimizer.
pub const REFERENCE_TOL: f64 = 1e-12;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "PROXSKIP_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// `synthetic` or a dataset path (LibSVM text or the cached format).
    pub data: String,
    /// Synthetic rows (ignored for file sources).
    pub n: usize,
    /// Synthetic feature dimension.
    pub dim: usize,
    /// Condition-number target for the synthetic ridge weight.
    pub kappa: Option<f64>,
    /// Explicit ridge weight; overrides `kappa` when set.
    pub lambda: Option<f64>,
    /// Workers/hubs `M`.
    pub hubs: usize,
    /// Minibatch size `τ` (sampling estimators).
    pub tau: usize,
    /// `gd`, `sgd`, `lsvrg` or `hub`.
    pub estimator: String,
    /// `identity` or `rand-k:<k>` (hub estimator only).
    pub compressor: String,
    /// `theory` or `manual`.
    pub hyper: String,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Iteration budget `T`.
    pub iters: usize,
    /// Optional stopping ratio on `Ψ_t / Ψ_0`.
    pub eps: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let out = std::env::var(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|_| PathBuf::from("proxskip-out"));
        ExperimentConfig {
            data: "synthetic".into(),
            n: 200,
            dim: 10,
            kappa: Some(1e3),
            lambda: None,
            hubs: 4,
            tau: 16,
            estimator: "lsvrg".into(),
            compressor: "identity".into(),
            hyper: "theory".into(),
            gamma: None,
            p: None,
            q: None,
            iters: 200_000,
            eps: Some(1e-6),
            seed: 0,
            out,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl ExperimentConfig {
    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "data" => self.data = v.to_string(),
            "n" => self.n = parse_num(key, v)?,
            "dim" => self.dim = parse_num(key, v)?,
            "kappa" => self.kappa = parse_opt(key, v)?,
            "lambda" => self.lambda = parse_opt(key, v)?,
            "hubs" => self.hubs = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "estimator" => self.estimator = v.to_string(),
            "compressor" => self.compressor = v.to_string(),
            "hyper" => self.hyper = v.to_string(),
            "gamma" => self.gamma = parse_opt(key, v)?,
            "p" => self.p = parse_opt(key, v)?,
            "q" => self.q = parse_opt(key, v)?,
            "iters" => self.iters = parse_num(key, v)?,
            "eps" => self.eps = parse_opt(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            other => return Err(bad(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses the flat key-value file format: one `key = value` per line,
    /// `#` comments and blank lines ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Full resolved configuration as key-value text. Applying the output of
    /// `to_text` onto any base reproduces the config exactly (every key is
    /// always emitted).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "data = {}", self.data);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "kappa = {}", opt(self.kappa));
        let _ = writeln!(s, "lambda = {}", opt(self.lambda));
        let _ = writeln!(s, "hubs = {}", self.hubs);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "estimator = {}", self.estimator);
        let _ = writeln!(s, "compressor = {}", self.compressor);
        let _ = writeln!(s, "hyper = {}", self.hyper);
        let _ = writeln!(s, "gamma = {}", opt(self.gamma));
        let _ = writeln!(s, "p = {}", opt(self.p));
        let _ = writeln!(s, "q = {}", opt(self.q));
        let _ = writeln!(s, "iters = {}", self.iters);
        let _ = writeln!(s, "eps = {}", opt(self.eps));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        s
    }

    pub fn compressor_spec(&self) -> Result<CompressorSpec> {
        let c = self.compressor.trim();
        if c == "identity" {
            return Ok(CompressorSpec::Identity);
        }
        if let Some(k) = c.strip_prefix("rand-k:") {
            let k: usize = k
                .parse()
                .map_err(|_| bad(format!("bad rand-k count `{k}`")))?;
            return Ok(CompressorSpec::RandK { k });
        }
        Err(bad(format!(
            "unknown compressor `{c}` (expected `identity` or `rand-k:<k>`)"
        )))
    }

    pub fn estimator_kind(&self) -> Result<EstimatorKind> {
        match self.estimator.trim() {
            "gd" => Ok(EstimatorKind::Gd),
            "sgd" => Ok(EstimatorKind::Sgd { tau: self.tau }),
            "lsvrg" => Ok(EstimatorKind::Lsvrg { tau: self.tau }),
            "hub" => Ok(EstimatorKind::Hub {
                tau: self.tau,
                compressor: self.compressor_spec()?,
            }),
            other => Err(bad(format!(
                "unknown estimator `{other}` (expected gd|sgd|lsvrg|hub)"
            ))),
        }
    }

    /// Builds the lifted problem (consensus regularizer over `hubs` shards)
    /// with its reference minimizer cached. Returns the problem and the
    /// resolved ridge weight.
    pub fn build_problem(&self) -> Result<(CompositeProblem, f64)> {
        let (dataset, lambda) = if self.data == "synthetic" {
            // The generator's draws do not depend on the ridge rule, so an
            // explicit `lambda` simply overrides the returned weight.
            let rule = LambdaRule::KappaTarget(self.kappa.unwrap_or(2.0));
            if self.kappa.is_none() && self.lambda.is_none() {
                return Err(bad("synthetic data needs `kappa` or `lambda`"));
            }
            let mut rng = Rng::new(self.seed);
            let (ds, generated) = dataio::generate_synthetic(&mut rng, self.n, self.dim, rule)?;
            (ds, self.lambda.unwrap_or(generated))
        } else {
            let text = std::fs::read_to_string(&self.data)
                .map_err(|e| bad(format!("cannot read `{}`: {e}", self.data)))?;
            let ds = dataio::parse_any(&text)?;
            let lambda = match self.lambda {
                Some(l) => l,
                None => return Err(bad("file datasets need an explicit `lambda`")),
            };
            (ds, lambda)
        };
        let partition = if self.hubs == 1 {
            Partition::flat(dataset.len())
        } else {
            let mut rng = Rng::derive(self.seed, 0x7a57);
            dataio::partition(&dataset, self.hubs, &mut rng)?
        };
        let obj = dataio::to_logistic(&dataset, &partition, lambda)?;
        let mut problem = CompositeProblem::new(Box::new(obj), Regularizer::Consensus);
        problem.ensure_reference(REFERENCE_TOL)?;
        Ok((problem, lambda))
    }

    /// Resolves `(γ, p, q)` per the configured mode.
    pub fn hyperparams(&self, problem: &CompositeProblem) -> Result<Hyperparams> {
        let kind = self.estimator_kind()?;
        match self.hyper.trim() {
            "theory" => theory_hyperparams(&kind, problem),
            "manual" => {
                let gamma = self.gamma.ok_or_else(|| bad("manual mode needs `gamma`"))?;
                let p = self.p.ok_or_else(|| bad("manual mode needs `p`"))?;
                let q = match (kind.has_control(), self.q) {
                    (true, Some(q)) => q,
                    (true, None) => return Err(bad("manual mode needs `q` for this estimator")),
                    (false, _) => 1.0,
                };
                Ok(Hyperparams { gamma, p, q })
            }
            other => Err(bad(format!("unknown hyper mode `{other}`"))),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(format!("bad value `{v}` for `{key}`")))
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "none" {
        return Ok(None);
    }
    Ok(Some(parse_num(key, v)?))
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "none".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_representation_round_trips_losslessly() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("estimator", "hub").unwrap();
        cfg.set("compressor", "rand-k:5").unwrap();
        cfg.set("gamma", "0.012345678901234567").unwrap();
        cfg.set("hyper", "manual").unwrap();
        cfg.set("p", "0.25").unwrap();
        cfg.set("q", "none").unwrap();
        cfg.set("eps", "1e-8").unwrap();
        cfg.set("seed", "987654321").unwrap();
        let text = cfg.to_text();
        let mut again = ExperimentConfig::default();
        again.apply_text(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(text, again.to_text());
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let mut cfg = ExperimentConfig::default();
        match cfg.apply_text("seed = 1\nbogus = 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn estimator_and_compressor_specs_parse() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("estimator", "hub").unwrap();
        cfg.set("compressor", "rand-k:3").unwrap();
        assert_eq!(
            cfg.estimator_kind().unwrap(),
            EstimatorKind::Hub {
                tau: cfg.tau,
                compressor: CompressorSpec::RandK { k: 3 }
            }
        );
        cfg.set("compressor", "topk:3").unwrap();
        assert!(cfg.estimator_kind().is_err());
        cfg.set("estimator", "adam").unwrap();
        assert!(cfg.estimator_kind().is_err());
    }
}
