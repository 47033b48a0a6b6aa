//! Largest-eigenvalue estimation for symmetric PSD operators.

/// Power iteration on a symmetric PSD operator given as `apply: v -> A v`.
///
/// Runs until the Rayleigh quotient changes by less than `rel_tol` in
/// relative terms, capped at `max_iters` sweeps. The start vector is a fixed
/// slightly-tilted ones vector, so the estimate is deterministic.
pub fn power_iteration<F>(dim: usize, apply: F, rel_tol: f64, max_iters: usize) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..dim).map(|k| 1.0 + 1e-3 * k as f64).collect();
    normalize(&mut v);
    let mut lambda = 0.0f64;
    for _ in 0..max_iters {
        let mut av = apply(&v);
        let next = dot(&v, &av);
        let norm = dot(&av, &av).sqrt();
        if norm <= f64::MIN_POSITIVE {
            return 0.0; // operator annihilates the iterate: spectrum is 0 here
        }
        for x in &mut av {
            *x /= norm;
        }
        let done = (next - lambda).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE);
        lambda = next;
        v = av;
        if done {
            break;
        }
    }
    lambda
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_top_eigenvalue_of_diagonal() {
        let diag = [3.0, 7.5, 1.0, 0.25];
        let lam = power_iteration(
            4,
            |v| v.iter().zip(diag.iter()).map(|(x, d)| x * d).collect(),
            1e-12,
            10_000,
        );
        assert!((lam - 7.5).abs() < 1e-9, "got {lam}");
    }

    #[test]
    fn zero_operator_reports_zero() {
        let lam = power_iteration(3, |v| vec![0.0; v.len()], 1e-8, 100);
        assert_eq!(lam, 0.0);
    }
}
