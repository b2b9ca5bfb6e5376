// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numerical module.
//!
//! The physics is written once over `T: Scalar`; `f64` is the working
//! precision used by the CLI and the acceptance suite, `f32` compiles and is
//! useful for quick exploratory runs of the static analysis.
//!
//! `nalgebra::RealField` and `num_traits::Float` both provide `sqrt`, `exp`,
//! `abs` and friends, so method calls on a bare `T` are ambiguous. Call them
//! through `Float::` explicitly.

use std::fmt;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{Float, FloatConst};

/// Real floating-point type the simulator is generic over.
pub trait Scalar:
    RealField + Float + FloatConst + Copy + Send + Sync + fmt::Debug + fmt::Display + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as num_traits::ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn count(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[inline]
pub(crate) fn cplx<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn real<T: Scalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}
