use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point type that metric values and aggregates are computed in.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static {}

/// Converts a count into the scalar type.
pub(crate) fn from_count<T: Scalar>(n: u64) -> T {
    T::from_u64(n).expect("count representable in scalar type")
}
