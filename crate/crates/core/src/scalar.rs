//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of the geometry is written against [`Scalar`] so the
//! same code runs in `f32` (large Monte Carlo sweeps) or `f64` (bound
//! evaluation, acceptance-grade accuracy). Concrete aliases for the common
//! `f64` instantiations live at the crate root.

use std::fmt::Display;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Floating-point scalar usable throughout the library: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum<Self> + Display
{
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + NumAssign + FftNum + Sum<T> + Display
{
}

/// Shorthand for converting an `f64` literal into the working scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Wrap an angle-like quantity into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(w: T) -> T {
    let two_pi = T::TAU();
    let mut r = w % two_pi;
    if r > T::PI() {
        r = r - two_pi;
    } else if r <= -T::PI() {
        r = r + two_pi;
    }
    r
}
