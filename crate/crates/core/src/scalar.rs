//! Scalar abstraction shared by every numerical module.
//!
//! All geometry, quadrature, assembly and analysis code is written against
//! [`Real`]; `f64` is the working precision used by the studies and the CLI,
//! `f32` is supported for the cheap parts (basis, quadrature, geometry).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type Cplx<T> = Complex<T>;

/// Point or vector in the plane.
pub type Point2<T> = [T; 2];

#[inline]
pub(crate) fn dot<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn sub<T: Real>(a: Point2<T>, b: Point2<T>) -> Point2<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn norm<T: Real>(a: Point2<T>) -> T {
    a[0].hypot(a[1])
}

/// `i * x` for a real `x`.
#[inline]
pub(crate) fn imag<T: Real>(x: T) -> Complex<T> {
    Complex::new(T::zero(), x)
}

/// Real scalar promoted to complex.
#[inline]
pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}
