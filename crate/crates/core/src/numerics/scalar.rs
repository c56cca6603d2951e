use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Field of coefficients used by every algebraic routine.
///
/// Implemented by exact rationals, `f64`, and second-order jets.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is lossless.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
    fn to_f64(&self) -> f64;
    /// Nearest representable value (exact binary expansion for rationals).
    fn from_f64(x: f64) -> Self;
    /// Size used for pivot selection.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
    fn is_zero(&self) -> bool;
}

/// Scalars that admit transcendental functions.
pub trait Real: Scalar {
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

impl Real for f64 {
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn magnitude(&self) -> f64 {
        if Zero::is_zero(self) {
            0.0
        } else {
            // any nonzero pivot is exact; prefer small denominators loosely
            ToPrimitive::to_f64(&self.abs()).unwrap_or(1.0).max(f64::MIN_POSITIVE)
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Convert between scalar types through `f64` (lossy for rationals).
pub fn cast<S: Scalar, T: Scalar>(x: &S) -> T {
    T::from_f64(x.to_f64())
}

/// Exact conversion of a small rational into a [`Scalar`].
pub fn rational_to<S: Scalar>(x: &Rational) -> S {
    let n = x.numer().to_i64().expect("numerator fits i64");
    let d = x.denom().to_i64().expect("denominator fits i64");
    S::from_ratio(n, d)
}
