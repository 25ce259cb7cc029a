//! Float functions that `core` lacks, backed by libm.

use num_traits::Float;

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    Float::ln(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    Float::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    Float::ceil(x)
}
