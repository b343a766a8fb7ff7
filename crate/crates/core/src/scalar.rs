//! Scalar abstraction shared by the numeric parts of the crate.
//!
//! Everything that trains, ranks or aggregates floating-point values is generic
//! over [`Real`], which is implemented for `f32` and `f64`. Score reconstruction
//! does not use this trait: it works on integers and exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite conversion to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Round half away from zero, the rounding used for every score and label.
#[inline]
pub fn round_half_away<T: Real>(x: T) -> T {
    // `Float::round` already rounds half-way cases away from zero.
    x.round()
}
