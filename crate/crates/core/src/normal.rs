//! Standard normal density and distribution function.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density φ(z).
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF Φ(z), accurate in both tails.
pub fn cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(z) without cancellation.
pub fn sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// P(lo ≤ Z < hi) for a standard normal Z; infinite bounds allowed.
pub fn interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    // Both bounds in the upper tail: difference of survival functions keeps precision.
    let p = if lo > 0.0 {
        sf(lo) - sf(hi)
    } else {
        cdf(hi) - cdf(lo)
    };
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((cdf(-2.0) - 0.022_750_131_948_179_2).abs() < 1e-14);
        assert!((pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(cdf(f64::INFINITY), 1.0);
        assert_eq!(cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn interval_handles_tails() {
        assert_eq!(interval(f64::NEG_INFINITY, f64::INFINITY), 1.0);
        assert!((interval(-1.0, 1.0) - 0.682_689_492_137_085_9).abs() < 1e-14);
        // Far upper tail still resolves a non-zero mass.
        let p = interval(9.0, 10.0);
        assert!(p > 1e-19 && p < 2e-19, "{p}");
        assert_eq!(interval(2.0, 2.0), 0.0);
    }
}
