//! Closed-form total-cost accounting.
//!
//! Communication is the unit cost; one component-gradient evaluation costs
//! `δ` (client→hub traffic costs `δ'` in the hub architecture). The ratio of
//! the full-gradient method's total cost to the variance-reduced method's is
//! a rational function of `δ` with closed-form endpoints and a closed-form
//! unit crossing.

/// Full-gradient method: `T_comm + δ m T_iter`.
pub fn cost_proxskip(t_comm: f64, t_iter: f64, delta: f64, m: f64) -> f64 {
    t_comm + delta * m * t_iter
}

/// Variance-reduced method: `T_comm + δ (q m + (1-q) τ + τ) T_iter`.
pub fn cost_proxskip_vr(t_comm: f64, t_iter: f64, delta: f64, m: f64, tau: f64, q: f64) -> f64 {
    t_comm + delta * (q * m + (1.0 - q) * tau + tau) * t_iter
}

/// Hub architecture with rand-k compression between clients and hubs:
/// `T_comm + δ' (q m + (k/d')((1-q) τ + τ)) T_iter`.
#[allow(clippy::too_many_arguments)]
pub fn cost_hub(
    t_comm: f64,
    t_iter: f64,
    delta_prime: f64,
    m: f64,
    tau: f64,
    q: f64,
    k: f64,
    d: f64,
) -> f64 {
    t_comm + delta_prime * (q * m + (k / d) * ((1.0 - q) * tau + tau)) * t_iter
}

/// Theoretical cost ratio (full-gradient over variance-reduced) as a
/// function of the per-sample cost `δ`:
///
/// ```text
/// ratio(δ) = (√(μL) + m L δ) / (√(μ L(τ)) + (2mμ + (2L(τ) - 2μ)τ) δ).
/// ```
pub fn cost_ratio(delta: f64, mu: f64, l: f64, l_tau: f64, m: f64, tau: f64) -> f64 {
    ((mu * l).sqrt() + m * l * delta)
        / ((mu * l_tau).sqrt() + (2.0 * m * mu + (2.0 * l_tau - 2.0 * mu) * tau) * delta)
}

/// `ratio(0) = √(L / L(τ))`.
pub fn cost_ratio_at_zero(l: f64, l_tau: f64) -> f64 {
    (l / l_tau).sqrt()
}

/// `lim_{δ→∞} ratio(δ) = m L / (2 (m μ + (L(τ) - μ) τ))`.
pub fn cost_ratio_at_infinity(mu: f64, l: f64, l_tau: f64, m: f64, tau: f64) -> f64 {
    m * l / (2.0 * (m * mu + (l_tau - mu) * tau))
}

/// Solves `ratio(δ) = 1` (linear in `δ`):
/// `δ* = (√(μ L(τ)) - √(μL)) / (mL - 2mμ - (2L(τ) - 2μ)τ)`.
/// Returns `None` when the denominator is nonpositive, i.e. the ratio never
/// crosses 1.
pub fn crossover_delta(mu: f64, l: f64, l_tau: f64, m: f64, tau: f64) -> Option<f64> {
    let denom = m * l - 2.0 * m * mu - (2.0 * l_tau - 2.0 * mu) * tau;
    if denom <= 0.0 {
        return None;
    }
    Some(((mu * l_tau).sqrt() - (mu * l).sqrt()) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::minibatch_smoothness;
    use crate::rng::Rng;
    use proptest::{prop_assert, proptest};

    #[test]
    fn proxskip_cost_worked_examples() {
        assert_eq!(cost_proxskip(10.0, 100.0, 0.0, 50.0), 10.0);
        assert_eq!(cost_proxskip(10.0, 100.0, 0.01, 50.0), 60.0);
        assert_eq!(cost_proxskip(7.0, 9.0, 1.0, 1.0), 16.0);
    }

    #[test]
    fn vr_cost_worked_examples() {
        // q = 1 refreshes y every step: T_comm + δ(m + τ)T_iter.
        assert_eq!(
            cost_proxskip_vr(5.0, 10.0, 0.1, 20.0, 4.0, 1.0),
            5.0 + 0.1 * 24.0 * 10.0
        );
        // q = 0, τ = m: twice the full pass.
        assert_eq!(
            cost_proxskip_vr(5.0, 10.0, 0.1, 20.0, 20.0, 0.0),
            5.0 + 0.1 * 40.0 * 10.0
        );
        let c = cost_proxskip_vr(20.0, 200.0, 1e-3, 100.0, 16.0, 0.02);
        assert!((c - 26.736).abs() < 1e-12, "got {c}");
    }

    #[test]
    fn hub_cost_worked_examples() {
        // k = d': no compression, collapses to the vr formula with δ'.
        let a = cost_hub(5.0, 10.0, 0.1, 20.0, 4.0, 0.3, 8.0, 8.0);
        let b = cost_proxskip_vr(5.0, 10.0, 0.1, 20.0, 4.0, 0.3);
        assert!((a - b).abs() < 1e-12);
        let c = cost_hub(30.0, 300.0, 1e-2, 100.0, 16.0, 0.02, 5.0, 100.0);
        assert!((c - 40.752).abs() < 1e-12, "got {c}");
    }

    #[test]
    fn ratio_endpoints_match_closed_forms() {
        let (mu, l, l_tau, m, tau) = (1.0, 4.0, 6.0, 100.0, 10.0);
        let at_zero = cost_ratio(0.0, mu, l, l_tau, m, tau);
        assert!((at_zero - (4.0f64 / 6.0).sqrt()).abs() < 1e-12);
        assert!((at_zero - 0.81650).abs() < 1e-5);
        assert!((cost_ratio_at_zero(l, l_tau) - at_zero).abs() < 1e-12);
        // Large δ approaches the asymptote from below or above monotonically.
        let inf = cost_ratio_at_infinity(mu, l, l_tau, m, tau);
        let near = cost_ratio(1e9, mu, l, l_tau, m, tau);
        assert!((near - inf).abs() <= 1e-6 * inf);
    }

    #[test]
    fn crossover_plugs_back_to_one() {
        // w8a-like synthetic constants: κ = 2e3, m = 100, τ = 16.
        let (mu, l) = (1.0, 2000.0);
        let l_tau = minibatch_smoothness(16, 100, l, 10.0 * l).unwrap();
        let delta = crossover_delta(mu, l, l_tau, 100.0, 16.0).expect("crossover exists");
        let r = cost_ratio(delta, mu, l, l_tau, 100.0, 16.0);
        assert!((r - 1.0).abs() <= 1e-12, "plug-back ratio {r}");
    }

    #[test]
    fn crossover_degenerate_cases() {
        // L(τ) = L with a winning denominator: the ratio starts at 1.
        let d = crossover_delta(1.0, 100.0, 100.0, 50.0, 2.0).unwrap();
        assert_eq!(d, 0.0);
        // τ = m with large L(τ): the asymptote stays below 1, no crossover.
        assert!(crossover_delta(1.0, 4.0, 400.0, 10.0, 10.0).is_none());
    }

    #[test]
    fn theoretical_complexities_reproduce_the_printed_ratio() {
        // Route A: the printed rational function. Route B: assemble the two
        // total costs from the complexity laws T_iter = κ·log(1/ε),
        // T_comm = √κ·log(1/ε) with κ = L/μ for the full-gradient method and
        // κ = L(τ)/μ, q = 2μ/L(τ) for the variance-reduced one. The log
        // factors cancel in the ratio.
        let mut rng = Rng::new(271);
        for _ in 0..100 {
            let mu = 0.1 + rng.uniform();
            let l = mu * (1.0 + 100.0 * rng.uniform());
            let l_max = l * (1.0 + 10.0 * rng.uniform());
            let m = 2.0 + (rng.uniform() * 200.0).floor();
            let tau = 1.0 + (rng.uniform() * (m - 1.0)).floor();
            let l_tau =
                minibatch_smoothness(tau as usize, m as usize, l, l_max).unwrap();
            let delta = 10f64.powf(-8.0 + 9.0 * rng.uniform());

            let route_a = cost_ratio(delta, mu, l, l_tau, m, tau);

            let log_term = 17.3; // arbitrary, cancels
            let ps_iter = l / mu * log_term;
            let ps_comm = (l / mu).sqrt() * log_term;
            let vr_iter = l_tau / mu * log_term;
            let vr_comm = (l_tau / mu).sqrt() * log_term;
            let q = 2.0 * mu / l_tau;
            let route_b = cost_proxskip(ps_comm, ps_iter, delta, m)
                / cost_proxskip_vr(vr_comm, vr_iter, delta, m, tau, q);

            assert!(
                (route_a - route_b).abs() <= 1e-12 * route_a.abs().max(1.0),
                "routes disagree: {route_a} vs {route_b}"
            );
        }
    }

    proptest! {
        #[test]
        fn ratio_is_monotone_when_the_asymptote_exceeds_the_start(
            mu in 0.01f64..1.0,
            kappa in 1.5f64..500.0,
            spread in 1.0f64..20.0,
            m_raw in 2usize..200,
            tau_frac in 0.0f64..1.0,
            seed in 0u64..u64::MAX,
        ) {
            let l = mu * kappa;
            let l_max = l * spread;
            let m = m_raw;
            let tau = 1 + ((m - 1) as f64 * tau_frac) as usize;
            let l_tau = minibatch_smoothness(tau, m, l, l_max).unwrap();
            let start = cost_ratio(0.0, mu, l, l_tau, m as f64, tau as f64);
            let limit = cost_ratio_at_infinity(mu, l, l_tau, m as f64, tau as f64);
            // Start value never exceeds 1 when τ < m (L(τ) >= L).
            if tau < m {
                prop_assert!(start <= 1.0 + 1e-12);
            }
            if limit > start {
                let mut rng = Rng::new(seed);
                let mut prev = start;
                let mut log_delta = -9.0;
                while log_delta < 3.0 {
                    log_delta += 0.1 + 0.2 * rng.uniform();
                    let r = cost_ratio(10f64.powf(log_delta), mu, l, l_tau, m as f64, tau as f64);
                    prop_assert!(r + 1e-12 * r.abs().max(1.0) >= prev,
                        "ratio decreased on the grid: {} -> {}", prev, r);
                    prev = r;
                }
            }
        }
    }
}
