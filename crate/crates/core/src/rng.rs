//! Deterministic randomness.
//!
//! Every stochastic element of a run (minibatch subsets, compressor draws,
//! the prox coin, the control-vector coin) is funneled through [`Rng`], a thin
//! wrapper around ChaCha8. The stream is a pure function of the 64-bit seed
//! and the draw sequence, so identical configurations replay bit-for-bit on
//! any platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

const F64_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

/// Seeded, platform-independent random stream.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    draws: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
            draws: 0,
        }
    }

    /// Independent stream derived from a base seed and a salt. Used to hand
    /// out per-run or per-check streams without overlapping draw sequences.
    pub fn derive(seed: u64, salt: u64) -> Self {
        Rng::new(splitmix64(seed ^ splitmix64(salt)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of raw 64-bit words consumed so far (the stream position).
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn next_u64(&mut self) -> u64 {
        self.draws += 1;
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution. One word.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * F64_SCALE
    }

    /// Coin flip: returns `true` with probability `p`. Consumes one draw.
    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "bernoulli probability {p} outside [0, 1]"
            )));
        }
        Ok(self.uniform() < p)
    }

    /// Unbiased integer in `[0, bound)` via multiply-shift rejection.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            let wide = (r as u128) * (bound as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as u64;
            }
        }
    }

    /// Uniform size-`tau` subset of `{0, .., m-1}`, returned in ascending
    /// order. Partial Fisher-Yates, so every subset has probability
    /// `1 / C(m, tau)` and each index is included with probability `tau / m`.
    pub fn sample_subset(&mut self, m: usize, tau: usize) -> Result<Vec<usize>> {
        if tau < 1 || tau > m {
            return Err(Error::InvalidInput(format!(
                "subset size {tau} outside [1, {m}]"
            )));
        }
        let mut pool: Vec<usize> = (0..m).collect();
        for slot in 0..tau {
            let offset = self.below((m - slot) as u64) as usize;
            pool.swap(slot, slot + offset);
        }
        pool.truncate(tau);
        pool.sort_unstable();
        Ok(pool)
    }

    /// Standard normal via Box-Muller. Consumes exactly two draws.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1], keeps ln finite
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_replays_identically() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.draws(), b.draws());
    }

    #[test]
    fn bernoulli_degenerate_probabilities() {
        let mut rng = Rng::new(1);
        for _ in 0..100 {
            assert!(rng.bernoulli(1.0).unwrap());
            assert!(!rng.bernoulli(0.0).unwrap());
        }
    }

    #[test]
    fn bernoulli_rejects_out_of_range() {
        let mut rng = Rng::new(1);
        assert!(rng.bernoulli(-0.1).is_err());
        assert!(rng.bernoulli(1.1).is_err());
        assert!(rng.bernoulli(f64::NAN).is_err());
    }

    #[test]
    fn bernoulli_empirical_mean_matches_binomial_error_bound() {
        let mut rng = Rng::new(42);
        let n = 1_000_000usize;
        let p = 0.3;
        let hits = (0..n).filter(|_| rng.bernoulli(p).unwrap()).count();
        let mean = hits as f64 / n as f64;
        let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (mean - p).abs() <= bound,
            "mean {mean} deviates from {p} by more than {bound}"
        );
    }

    #[test]
    fn full_subset_is_everything() {
        let mut rng = Rng::new(3);
        assert_eq!(rng.sample_subset(5, 5).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn subset_rejects_bad_sizes() {
        let mut rng = Rng::new(3);
        assert!(rng.sample_subset(4, 0).is_err());
        assert!(rng.sample_subset(4, 5).is_err());
    }

    #[test]
    fn subset_inclusion_frequency_is_tau_over_m() {
        let mut rng = Rng::new(11);
        let n = 100_000usize;
        let mut counts = [0usize; 2];
        for _ in 0..n {
            let s = rng.sample_subset(2, 1).unwrap();
            counts[s[0]] += 1;
        }
        let se = (0.25 / n as f64).sqrt();
        for c in counts {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - 0.5).abs() <= 4.0 * se,
                "index frequency {freq} too far from 0.5"
            );
        }
    }

    #[test]
    fn subsets_of_four_choose_two_are_uniform() {
        let mut rng = Rng::new(13);
        let n = 100_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let s = rng.sample_subset(4, 2).unwrap();
            *counts.entry((s[0], s[1])).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6, "all C(4,2) subsets must occur");
        let p = 1.0 / 6.0;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        for (&subset, &c) in &counts {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 4.0 * se,
                "subset {subset:?} frequency {freq} too far from 1/6"
            );
        }
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = Rng::new(5);
        let n = 200_000usize;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }
}
