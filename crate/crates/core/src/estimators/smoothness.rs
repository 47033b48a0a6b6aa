//! Minibatch-interpolated smoothness and second-moment identities for
//! uniform sampling without replacement.

use crate::error::{Error, Result};

/// Expected-smoothness constant of the size-`tau` uniform minibatch:
///
/// ```text
/// L(τ) = (m - τ)/(τ (m - 1)) · L_max  +  m (τ - 1)/(τ (m - 1)) · L,
/// ```
///
/// which interpolates from `L_max` at `τ = 1` down to `L` at `τ = m` and is
/// nonincreasing in `τ`. For `m = 1` the convention `L(1) = L_max = L`
/// applies.
pub fn minibatch_smoothness(tau: usize, m: usize, l: f64, l_max: f64) -> Result<f64> {
    if tau < 1 || tau > m {
        return Err(Error::InvalidInput(format!(
            "minibatch size {tau} outside [1, {m}]"
        )));
    }
    if m == 1 {
        return Ok(l);
    }
    let (mf, tf) = (m as f64, tau as f64);
    let within = (mf - tf) / (tf * (mf - 1.0));
    let between = mf * (tf - 1.0) / (tf * (mf - 1.0));
    Ok(within * l_max + between * l)
}

/// Exact second moment of a size-`tau` uniform minibatch average: for
/// `g = (1/τ) Σ_{j∈S} a_j`,
///
/// ```text
/// E‖g‖² = (m - τ)/(τ (m - 1)) · (1/m) Σ‖a_j‖²  +  m (τ - 1)/(τ (m - 1)) · ‖ā‖².
/// ```
///
/// `within` is `(1/m) Σ‖a_j‖²` and `between` is `‖ā‖²`.
pub fn minibatch_second_moment(within: f64, between: f64, m: usize, tau: usize) -> f64 {
    debug_assert!(tau >= 1 && tau <= m);
    if m == 1 || tau == m {
        return between;
    }
    let (mf, tf) = (m as f64, tau as f64);
    let cw = (mf - tf) / (tf * (mf - 1.0));
    let cb = mf * (tf - 1.0) / (tf * (mf - 1.0));
    cw * within + cb * between
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_l_max_and_l() {
        assert_eq!(minibatch_smoothness(1, 8, 3.0, 11.0).unwrap(), 11.0);
        assert_eq!(minibatch_smoothness(8, 8, 3.0, 11.0).unwrap(), 3.0);
    }

    #[test]
    fn interpolated_value_matches_direct_formula() {
        // τ=2, m=4, L_max=10, L=4: (2/6)·10 + (4/6)·4 = 6.
        let v = minibatch_smoothness(2, 4, 4.0, 10.0).unwrap();
        assert!((v - 6.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn monotone_nonincreasing_in_tau() {
        let m = 37;
        let mut prev = f64::INFINITY;
        for tau in 1..=m {
            let v = minibatch_smoothness(tau, m, 2.0, 19.0).unwrap();
            assert!(v <= prev + 1e-15, "L({tau}) = {v} rose above {prev}");
            prev = v;
        }
    }

    #[test]
    fn single_component_uses_the_convention() {
        assert_eq!(minibatch_smoothness(1, 1, 5.0, 5.0).unwrap(), 5.0);
        assert!(minibatch_smoothness(0, 4, 1.0, 1.0).is_err());
        assert!(minibatch_smoothness(5, 4, 1.0, 1.0).is_err());
    }

    #[test]
    fn second_moment_full_batch_is_the_mean_norm() {
        assert_eq!(minibatch_second_moment(7.0, 2.0, 6, 6), 2.0);
        assert_eq!(minibatch_second_moment(7.0, 2.0, 6, 1), 7.0);
    }
}
