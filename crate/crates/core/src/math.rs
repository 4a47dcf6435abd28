//! Thin wrappers over `libm` so the numerical code reads like `std` float code
//! while staying `no_std`.

pub const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[cfg(test)]
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}
#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}
#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `|x|^e` with the convention `0^0 = 1`.
#[inline]
pub fn abs_pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        powf(abs(x), e)
    }
}

/// Relative closeness used for exponent bookkeeping (critical cases such as
/// `p·a + 1 = 0`).
#[inline]
pub fn near_zero(x: f64) -> bool {
    abs(x) <= 1e-12
}
