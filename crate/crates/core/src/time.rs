//! Scalar type used for simulation time.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real-valued time.
///
/// Implemented for `f32` and `f64`. All time arithmetic is exact-compare:
/// two transitions coincide only if their times are bit-identical, so every
/// time is derived by the same sequence of additions on every code path.
pub trait Time:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal; panics only on values the scalar cannot represent at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("time literal not representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Total order for non-NaN times.
    fn cmp_time(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }
}

impl<T> Time for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

pub(crate) fn min_time<T: Time>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y < x { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}
