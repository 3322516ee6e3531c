use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Discrete time, in slots.
pub type Time = i64;

/// Real scalar used by the curve and bound algebra.
///
/// `+∞` is a legal value everywhere an extended real is expected.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal out of range")
    }

    /// Converts a slot index.
    fn from_time(t: Time) -> Self {
        Self::from_i64(t).expect("time out of range")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn pos<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

/// Extended-real subtraction. `(+∞) − (+∞)` is undefined.
pub(crate) fn ext_sub<S: Scalar>(a: S, b: S) -> crate::Result<S> {
    if a.is_infinite() && b.is_infinite() && a.signum() == b.signum() {
        return Err(crate::Error::UndefinedArithmetic);
    }
    Ok(a - b)
}
