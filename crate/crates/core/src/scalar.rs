use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar used throughout the crate (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// `floor(x)` that treats values within `1e-9` of the next integer as that integer.
pub(crate) fn floor_tol<T: Real>(x: T) -> i64 {
    let r = x.round();
    if (x - r).abs() <= lit::<T>(1e-9) * T::one().max(x.abs()) {
        r.to_i64().unwrap_or(0)
    } else {
        x.floor().to_i64().unwrap_or(0)
    }
}

/// `ceil(x)` with the same tolerance as [`floor_tol`].
pub(crate) fn ceil_tol<T: Real>(x: T) -> i64 {
    -floor_tol(-x)
}

/// `sign` with `sign(0) = +1`.
#[inline]
pub(crate) fn sign_pos<T: Real>(x: T) -> i8 {
    if x < T::zero() {
        -1
    } else {
        1
    }
}

#[inline]
pub(crate) fn from_i64<T: Real>(k: i64) -> T {
    T::from_i64(k).expect("integer representable in scalar type")
}
