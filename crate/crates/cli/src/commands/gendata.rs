//! `gen-data`: seeded synthetic dataset written in the cached format.

use std::path::Path;

use proxskip_core::dataio::{generate_synthetic, write_cache, LambdaRule};
use proxskip_core::error::{Error, Result};
use proxskip_core::rng::Rng;

use crate::commands::write_file;
use crate::exit_codes;

pub fn cmd_gen_data(
    n: usize,
    dim: usize,
    kappa: Option<f64>,
    lambda_frac: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<i32> {
    let rule = match (kappa, lambda_frac) {
        (Some(k), None) => LambdaRule::KappaTarget(k),
        (None, Some(c)) => LambdaRule::FractionOfL(c),
        (None, None) => LambdaRule::FractionOfL(5e-4),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "pick either --kappa or --lambda-frac, not both".into(),
            ))
        }
    };
    let mut rng = Rng::new(seed);
    let (dataset, lambda) = generate_synthetic(&mut rng, n, dim, rule)?;
    write_file(out, &write_cache(&dataset))?;
    println!(
        "gen-data: {} rows, dim {}, suggested lambda {lambda} (pass it as --lambda), wrote {}",
        dataset.len(),
        dataset.dim,
        out.display()
    );
    Ok(exit_codes::SUCCESS)
}
