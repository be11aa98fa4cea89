//! Standard normal distribution function.
//!
//! Evaluated through the complementary error function so the lower tail keeps
//! full relative precision: `N(x) = erfc(-x / sqrt 2) / 2`. `libm::erfc` is
//! the fdlibm rational approximation, accurate to about one ulp.

use std::f64::consts::FRAC_1_SQRT_2;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
