//! Float helpers that work without `std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// Wraps an angle into `(-pi, pi]`.
pub(crate) fn wrap_phase(theta: f64) -> f64 {
    use core::f64::consts::PI;
    let mut t = libm::remainder(theta, 2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Base-2 rate of a single link use over two slots: `0.5 * log2(1 + snr)`.
#[inline]
pub(crate) fn half_log_rate(snr: f64) -> f64 {
    0.5 * libm::log1p(snr) / core::f64::consts::LN_2
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
