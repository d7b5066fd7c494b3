//! Scalar abstraction shared by every module.
//!
//! All distribution, gap and learner code is written against [`Real`] so it
//! can run in `f32` or `f64`. Probabilities, thresholds and rewards share the
//! same scalar; `±∞` is used directly as the extended-real endpoints.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which no caller passes.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `max` over an iterator with the empty-set convention `-∞`.
pub(crate) fn max_or_neg_inf<T: Real>(it: impl IntoIterator<Item = T>) -> T {
    it.into_iter().fold(T::neg_infinity(), T::max)
}

/// `min` over an iterator with the empty-set convention `+∞`.
pub(crate) fn min_or_inf<T: Real>(it: impl IntoIterator<Item = T>) -> T {
    it.into_iter().fold(T::infinity(), T::min)
}

/// Clamps a probability into `[0, 1]`; `q ± Δ` can leave the unit interval by
/// an ulp at the ends of the gap search range.
pub(crate) fn clamp_prob<T: Real>(p: T) -> T {
    p.max(T::zero()).min(T::one())
}
