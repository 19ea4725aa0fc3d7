//! Normal tail and related special functions.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Scaled complementary error function `exp(x²)·erfc(x)`.
///
/// Uses the Laplace continued fraction once `erfc` would approach underflow.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        return (x * x).exp() * erfc(x);
    }
    // erfc(x) = exp(-x²)/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    1.0 / (PI.sqrt() * tail)
}

/// Standard normal tail probability `P(N > u)`.
pub fn normal_tail(u: f64) -> f64 {
    0.5 * erfc(u * FRAC_1_SQRT_2)
}

/// Natural logarithm of [`normal_tail`], finite far beyond the underflow point.
pub fn log_normal_tail(u: f64) -> f64 {
    if u < 30.0 {
        normal_tail(u).ln()
    } else {
        (0.5 * erfcx(u * FRAC_1_SQRT_2)).ln() - 0.5 * u * u
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    normal_tail(-x)
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
