//! Scalar abstraction for the numeric kernels (f32 or f64).

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the core math is generic over.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lift an `f64` literal into the scalar type.
#[inline]
pub fn real<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("literal must be representable")
}
