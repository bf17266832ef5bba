//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Float`].

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Floating-point scalar the library is generic over.
///
/// `f32` and `f64` implement it out of the box; anything else providing the
/// `num_traits::Float` surface plus the assignment operators will too.
pub trait Float:
    num_traits::Float
    + num_traits::NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`. Constants and RNG draws are produced in
    /// `f64` and narrowed, so that runs differ across scalar types only by
    /// rounding, never by control flow.
    fn from_f64(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 -> scalar conversion")
    }

    /// Widening conversion used for serialization and display.
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar -> f64 conversion")
    }
}

impl Float for f32 {}
impl Float for f64 {}

/// Shorthand for `F::from_f64` in expression-heavy numeric code.
#[inline]
pub fn f<F: Float>(x: f64) -> F {
    F::from_f64(x)
}
