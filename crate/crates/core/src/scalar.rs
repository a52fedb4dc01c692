//! Floating-point abstraction for the numeric kernels.

use std::fmt;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar all pool math is generic over: `f32` or `f64`.
///
/// Validation tolerances scale with the precision of the scalar, so the
/// per-type constants live here rather than as free-standing magic numbers.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Tolerance for "sums to one" checks on probability vectors and for
    /// comparing a cached clustering objective against a recomputation.
    const SUM_TOLERANCE: Self;

    /// Converts a configuration value; panics only on NaN, which no valid
    /// config can contain.
    fn from_config(value: f64) -> Self {
        Self::from_f64(value).expect("finite config value")
    }
}

impl Scalar for f64 {
    const SUM_TOLERANCE: Self = 1e-9;
}

impl Scalar for f32 {
    const SUM_TOLERANCE: Self = 1e-5;
}

/// Squared Euclidean distance, accumulated in index order.
pub fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        acc += d * d;
    }
    acc
}

/// Euclidean norm, accumulated in index order.
pub fn l2_norm<T: Scalar>(v: &[T]) -> T {
    let mut acc = T::zero();
    for x in v {
        acc += *x * *x;
    }
    acc.sqrt()
}
