//! Thin wrappers around the gamma function with the edge cases the
//! series and asymptotic expansions rely on.

use std::f64::consts::PI;

use statrs::function::gamma as sg;

/// Γ(x) for real x; infinite at the non-positive integers, exact at small
/// positive integers.
pub fn gamma(x: f64) -> f64 {
    if x == x.floor() {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        if x <= 20.0 {
            return (1..x as u64).product::<u64>() as f64;
        }
    }
    sg::gamma(x)
}

/// ln |Γ(x)| for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    sg::ln_gamma(x)
}

/// 1/Γ(x), exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 170.0 {
        return (-ln_gamma(x)).exp();
    }
    if x < -170.0 {
        // reflection: 1/Γ(x) = Γ(1-x) sin(πx) / π
        return sin_pi(x) / PI * ln_gamma(1.0 - x).exp();
    }
    1.0 / gamma(x)
}

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if x == x.floor() {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).floor();
    (PI * r).sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.5) - PI.sqrt() / 2.0).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn poles_have_zero_reciprocal() {
        for k in 0..5 {
            assert_eq!(rgamma(-(k as f64)), 0.0);
        }
        assert!(gamma(-2.0).is_infinite());
    }

    #[test]
    fn reciprocal_matches_for_negative_arguments() {
        // Γ(-0.5) = -2√π
        assert!((rgamma(-0.5) + 1.0 / (2.0 * PI.sqrt())).abs() < 1e-14);
        let big = rgamma(172.0);
        assert!(big > 0.0 && (big.ln() + ln_gamma(172.0)).abs() < 1e-10);
    }

    #[test]
    fn sin_pi_integers() {
        assert_eq!(sin_pi(3.0), 0.0);
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-16);
        assert!((sin_pi(-0.5) + 1.0).abs() < 1e-16);
    }
}
