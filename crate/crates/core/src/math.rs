//! Thin wrappers over `libm` so call sites read like the std float methods.

pub(crate) use core::f64::consts::PI;

pub(crate) const TAU: f64 = 2.0 * PI;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

/// Maps an angle into `[-π, π)`.
pub(crate) fn wrap_phase(x: f64) -> f64 {
    let w = x - TAU * floor((x + PI) / TAU);
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Euclidean remainder into `[0, period)`.
pub(crate) fn rem_euclid(x: f64, period: f64) -> f64 {
    let r = x - period * floor(x / period);
    if r >= period {
        r - period
    } else {
        r
    }
}
