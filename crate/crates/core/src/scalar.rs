//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All signal processing is written against [`Real`], which is implemented
//! for `f32` and `f64`. Configuration parameters (thresholds, spans, noise
//! scales) stay `f64` and are converted at the point of use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Display + Debug
{
    /// Converts a configuration constant into the sample type.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 constant representable")
    }

    /// Converts an index or count.
    #[inline]
    fn from_usize_lossy(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Display + Debug
{
}
