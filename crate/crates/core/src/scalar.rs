//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point type the analysis is carried out in.
///
/// Implemented for `f32` and `f64`. Costs, budgets, probabilities and
/// integrals are all expressed in the same scalar.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values at all, which is never the case for the
    /// provided implementations.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Linear interpolation `a + t (b - a)`.
#[inline]
pub(crate) fn lerp<T: Scalar>(a: T, b: T, t: T) -> T {
    a + t * (b - a)
}

/// Arithmetic mean accumulated left to right. Returns zero for empty input.
pub(crate) fn mean<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let mut sum = T::zero();
    let mut n = 0usize;
    for v in values {
        sum = sum + v;
        n += 1;
    }
    if n == 0 {
        T::zero()
    } else {
        sum / T::count(n)
    }
}
