use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the numeric kernels are generic over.
///
/// Implemented by `f32` and `f64`. The bound set is what the kernels
/// actually use: transcendentals from [`Float`], exact constants through
/// [`FromPrimitive`], and thread-safe sharing for the parallel drivers.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literals and precomputed constants.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any supported scalar")
    }

    /// Exact conversion from a small index.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("index converts to any supported scalar")
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}
