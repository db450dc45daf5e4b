//! Scalar abstraction for the numerical core.
//!
//! Every quantity in this crate is a plain IEEE float; the modules are
//! generic over [`Float`] so the same code runs in `f32` and `f64`.
//! The crate root exports `f64` aliases for the common instantiation.

use core::fmt;
use core::iter::Sum;

/// Floating-point scalar used throughout the crate.
///
/// A thin bundle on top of `num_traits::Float` adding conversions and the
/// bounds the analysis code needs.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssignOps
    + Sum
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into `Self`.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal must convert")
    }

    /// Converts a count into `Self`.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count must convert")
    }

    /// Lossy view as `f64`, for diagnostics and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Float for f32 {}
impl Float for f64 {}

/// Sign function with `sgn(0) = 0`.
///
/// `f64::signum` maps `0.0` to `1.0`, which is the wrong convention for the
/// bias model: the bias must vanish exactly at the equilibrium point.
pub fn sgn<T: Float>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}
