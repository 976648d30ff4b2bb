//! Scalar abstraction used throughout the crate.
//!
//! All numeric code is generic over a real scalar `T: Real`, with complex
//! quantities represented as [`num_complex::Complex<T>`]. Concrete aliases
//! for the common instantiations live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable in the scalar type")
}

/// Converts a `usize` (an index or a count) into the working scalar type.
#[inline]
pub fn real_from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize must be representable in the scalar type")
}

/// Complex zero.
#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Unit complex number `e^{i phase}`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}
