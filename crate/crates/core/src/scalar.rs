//! Numeric carriers for probabilities.
//!
//! Every probabilistic object is generic over a [`Scalar`]: either exact
//! rationals ([`Rational`]) or `f64` with an explicit equality tolerance.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational number used in exact mode.
pub type Rational = BigRational;

/// Default float equality tolerance for behaviors.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Arithmetic mode of a probabilistic object.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "epsilon")]
pub enum ArithmeticMode {
    Exact,
    Float(f64),
}

impl ArithmeticMode {
    pub fn name(&self) -> &'static str {
        match self {
            ArithmeticMode::Exact => "exact",
            ArithmeticMode::Float(_) => "float",
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            ArithmeticMode::Exact => 0.0,
            ArithmeticMode::Float(eps) => *eps,
        }
    }
}

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Signed + Send + Sync + 'static
{
    /// `true` for exact arithmetic; tolerances are ignored in that case.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn to_f64(&self) -> f64;

    /// Equality up to `eps` (exact equality in exact mode).
    fn near(&self, other: &Self, eps: f64) -> bool;

    /// `self == 0` up to `eps`.
    fn near_zero(&self, eps: f64) -> bool;

    /// `self < 0` beyond `eps`.
    fn below_zero(&self, eps: f64) -> bool;

    /// `self > 0` beyond `eps`.
    fn above_zero(&self, eps: f64) -> bool {
        (-self.clone()).below_zero(eps)
    }

    fn mode(eps: f64) -> ArithmeticMode {
        if Self::EXACT {
            ArithmeticMode::Exact
        } else {
            ArithmeticMode::Float(eps)
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn near(&self, other: &Self, eps: f64) -> bool {
        (self - other).abs() <= eps
    }

    fn near_zero(&self, eps: f64) -> bool {
        self.abs() <= eps
    }

    fn below_zero(&self, eps: f64) -> bool {
        *self < -eps
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn near(&self, other: &Self, _eps: f64) -> bool {
        self == other
    }

    fn near_zero(&self, _eps: f64) -> bool {
        self.is_zero()
    }

    fn below_zero(&self, _eps: f64) -> bool {
        self.is_negative()
    }
}

/// Exact binary value of a float as a rational. `None` for non-finite input.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_f64(x)
}

/// Parses `"p/q"`, `"p"`, or a decimal literal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let mut num: BigInt = digits.parse().ok()?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Rational::new(num, den));
    }
    let num: BigInt = s.parse().ok()?;
    Some(Rational::from_integer(num))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn sum<T: Scalar>(values: &[T]) -> T {
    values.iter().fold(T::zero(), |acc, v| acc + v.clone())
}

pub(crate) fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.clone() - y.clone()).abs())
        .fold(T::zero(), T::max_of)
}
