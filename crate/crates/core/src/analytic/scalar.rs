use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

/// Arithmetic shared by the exact and floating evaluation paths, so both
/// run the same expression in the same order.
pub trait Scalar:
    Clone
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    /// Nearest representable value.
    fn from_bigint(v: &BigInt) -> Self;
    fn from_ratio(v: &BigRational) -> Self;
    fn as_f64(&self) -> f64;
    fn below_zero(&self) -> bool;
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_bigint(v: &BigInt) -> Self {
        ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
    }

    fn from_ratio(v: &BigRational) -> Self {
        ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn below_zero(&self) -> bool {
        *self < 0.0
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }

    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }

    fn from_ratio(v: &BigRational) -> Self {
        v.clone()
    }

    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn below_zero(&self) -> bool {
        Signed::is_negative(self)
    }
}
