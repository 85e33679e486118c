//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::ToPrimitive;
use std::fmt::{Debug, Display};

/// Real floating-point scalar the numerics are written against.
///
/// Implemented for `f32` and `f64`. Tolerances in this crate are specified in
/// `f64` and converted with [`Real::tol`], which floors them at a small multiple
/// of the type's machine epsilon so that `f32` instantiations stay meaningful.
pub trait Real:
    RealField + Copy + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Machine epsilon of the concrete type, widened to `f64`.
    const EPS: f64;

    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self;

    /// Widens to `f64`.
    fn as_f64(self) -> f64;

    /// Tolerance `x`, floored at `64 * EPS`.
    fn tol(x: f64) -> Self {
        Self::lit(x.max(64.0 * Self::EPS))
    }

    fn mag(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }
}

impl Real for f64 {
    const EPS: f64 = f64::EPSILON;

    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const EPS: f64 = f32::EPSILON as f64;

    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
