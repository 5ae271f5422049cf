//! Scalar abstraction: the whole crate is generic over the floating-point
//! type through [`Scalar`]. `f64` is the validated precision; `f32` compiles
//! and runs but the documented tolerances assume `f64`.

use core::fmt;
use core::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    fn f(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_(v: usize) -> Self {
        Self::from_usize(v).expect("usize not representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + Sum<T>
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifts_constants_in_both_precisions() {
        assert_eq!(<f64 as Scalar>::f(0.5), 0.5);
        assert_eq!(<f32 as Scalar>::f(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::from_usize_(7), 7.0);
    }
}
