//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar the geometry, rendering and statistics code is generic over.
///
/// Implemented for `f32` and `f64`. File formats always store `f32` (PLY) or
/// IEEE binary16 (compact), so conversions go through [`Real::lit`] and
/// [`Real::as_f64`].
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts a literal; every `f64` is representable up to rounding in both impls.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 literal fits scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("scalar converts to f64")
    }

    #[inline]
    fn as_f32(self) -> f32 {
        ToPrimitive::to_f32(&self).expect("scalar converts to f32")
    }

    #[inline]
    fn of_f32(v: f32) -> Self {
        Self::lit(v as f64)
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::lit(v as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}
