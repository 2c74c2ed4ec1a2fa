//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All state vectors, operators and integrators are generic over a real
//! floating-point type `T: Real`; complex amplitudes are `Complex<T>`.
//! The crate root exposes `f64` aliases for everyday use.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use num_complex::Complex;

/// Real floating-point type usable throughout the simulator (`f32` or `f64`).
pub trait Real:
    RealField
    + Float
    + FromPrimitive
    + ToPrimitive
    + Copy
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Tolerance used when validating normalization and Hermiticity of
    /// states and operators.
    fn state_tol() -> Self;

    /// Loose tolerance for trace and positivity checks on integrated
    /// density matrices.
    fn trace_tol() -> Self;

    /// One draw from the standard normal distribution (ziggurat).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("representable integer")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn state_tol() -> Self {
        1e-10
    }
    fn trace_tol() -> Self {
        1e-8
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f32 {
    fn state_tol() -> Self {
        1e-4
    }
    fn trace_tol() -> Self {
        1e-3
    }
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
