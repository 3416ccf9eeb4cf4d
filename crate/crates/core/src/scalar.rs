//! Scalar abstraction shared by every numeric module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the operator algebra is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances in this crate are tuned for
/// `f64`; `f32` works for the algebra but most default tolerances are below
/// its resolution.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` literal, panicking only for types that cannot
    /// represent finite `f64` values (none of the provided impls).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
