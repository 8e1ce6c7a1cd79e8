//! Scalar types usable as edge weights: `f64` for speed, `BigRational` when
//! results must be exact.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub trait Weight:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    fn from_u64(v: u64) -> Self;
    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_finite_nonneg(&self) -> bool;
    /// Residual capacities at or below this are treated as saturated during
    /// max-flow. Zero for exact types.
    fn flow_tolerance(total_capacity: &Self) -> Self;
}

impl Weight for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_finite_nonneg(&self) -> bool {
        self.is_finite() && *self >= 0.0
    }
    fn flow_tolerance(total_capacity: &Self) -> Self {
        total_capacity * 1e-13
    }
}

impl Weight for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_finite_nonneg(&self) -> bool {
        !self.is_negative()
    }
    fn flow_tolerance(_: &Self) -> Self {
        BigRational::zero()
    }
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
