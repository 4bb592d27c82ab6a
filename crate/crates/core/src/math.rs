//! Float functions that resolve to `std` or `libm` depending on features.

use num_traits::Float;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline]
pub fn powf(x: f64, p: f64) -> f64 {
    Float::powf(x, p)
}

#[inline]
pub fn round(x: f64) -> f64 {
    Float::round(x)
}

#[inline]
pub fn exp_m1(x: f64) -> f64 {
    Float::exp_m1(x)
}
