//! Scalar math routed through `libm` so results do not depend on whether
//! `std` is linked.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// `⌈x⌉` with a small downward nudge so values that should be integers but
/// carry rounding noise (e.g. `2.0000000000001`) land on that integer.
#[inline]
pub fn ceil_nudged(x: f64) -> f64 {
    libm::ceil(x - 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nudged_ceiling() {
        assert_eq!(ceil_nudged(2.0 + 1e-14), 2.0);
        assert_eq!(ceil_nudged(1.5), 2.0);
        assert_eq!(ceil_nudged(3.0), 3.0);
        assert_eq!(ceil_nudged(0.0), 0.0);
    }
}
