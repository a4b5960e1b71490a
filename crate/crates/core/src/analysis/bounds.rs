//! Entropy and the union-bound constants for Gaussian couplings.

use crate::error::{QuboError, Result};

/// Published values of the Gaussian bound constants, kept for comparison.
pub const REPORTED_M_STAR: f64 = 0.562;
pub const REPORTED_ALPHA_STAR: f64 = 0.644;

/// `I(x) = -x log x - (1-x) log(1-x)` with `0 log 0 = 0`.
pub fn entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QuboError::Domain(x));
    }
    let t = |p: f64| if p == 0.0 { 0.0 } else { -p * p.ln() };
    Ok(t(x) + t(1.0 - x))
}

fn exponent(alpha: f64, m: f64) -> f64 {
    let s = alpha * (1.0 - alpha);
    entropy(alpha).expect("alpha in (0,1)") - m * m / (2.0 * s * s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub m_star: f64,
    pub alpha_star: f64,
    /// `I(α*) - m*² / (2 α*² (1-α*)²)`, zero at the extremal point.
    pub residual: f64,
}

/// Largest `m` for which `α ↦ I(α) - m² / (2α²(1-α)²)` still has a zero in `(0,1)`.
///
/// For `m > 0` the function tends to `-∞` at both ends, so it has zeros exactly
/// when its maximum is nonnegative. The maximum over an `α` grid of step
/// `10⁻⁴` drives a bisection on `m`; the maximizing `α` is then refined by
/// golden-section search.
pub fn gaussian_bound_constants() -> BoundConstants {
    const STEPS: usize = 10_000;
    let grid_max = |m: f64| -> (f64, f64) {
        (1..STEPS)
            .map(|k| {
                let a = k as f64 / STEPS as f64;
                (exponent(a, m), a)
            })
            .fold((f64::NEG_INFINITY, 0.5), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let (mut lo, mut hi) = (1e-3, 1.0);
    debug_assert!(grid_max(lo).0 >= 0.0 && grid_max(hi).0 < 0.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if grid_max(mid).0 >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = lo;
    let (_, a0) = grid_max(m);
    let (mut a, mut b) = (a0 - 1.0 / STEPS as f64, a0 + 1.0 / STEPS as f64);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if exponent(c, m) > exponent(d, m) {
            b = d;
        } else {
            a = c;
        }
    }
    let alpha = 0.5 * (a + b);
    BoundConstants {
        m_star: m,
        alpha_star: alpha,
        residual: exponent(alpha, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert!((entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        // -0.644 ln 0.644 - 0.356 ln 0.356 evaluated to 10 digits
        assert!((entropy(0.644).unwrap() - 0.651_081_959_2).abs() < 1e-9);
        assert!(matches!(entropy(1.5), Err(QuboError::Domain(_))));
        assert!(entropy(-0.1).is_err());
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            assert!((entropy(x).unwrap() - entropy(1.0 - x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn extremality() {
        let c = gaussian_bound_constants();
        assert!(c.residual.abs() < 1e-6);
        let has_zero = |m: f64| (1..100_000).any(|k| exponent(k as f64 / 100_000.0, m) >= 0.0);
        assert!(has_zero(c.m_star - 1e-4));
        assert!(!has_zero(c.m_star + 1e-4));
    }
}
