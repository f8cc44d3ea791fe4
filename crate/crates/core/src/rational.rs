//! Exact rational numbers and Lebesgue exponents.
//!
//! Exponent bookkeeping never touches floating point: every value is a
//! [`BigRational`], and the time exponent `q = ∞` is a distinguished
//! [`Exponent::Infinite`] value with `1/∞ = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ParseRationalError;

/// Exact rational number used throughout the exponent arithmetic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn integer(value: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Nearest `f64`; only for reporting and for handing parameters to the
    /// floating-point solvers.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl std::ops::$tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(std::ops::$tr::$method(self.0, rhs.0))
            }
        }
        impl std::ops::$tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(std::ops::$tr::$method(&self.0, &rhs.0))
            }
        }
        impl std::ops::$tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(std::ops::$tr::$method(self.0, &rhs.0))
            }
        }
        impl std::ops::$tr<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(std::ops::$tr::$method(&self.0, rhs.0))
            }
        }
        impl std::ops::$tr<i64> for Rational {
            type Output = Rational;
            fn $method(self, rhs: i64) -> Rational {
                Rational(std::ops::$tr::$method(
                    self.0,
                    BigRational::from_integer(BigInt::from(rhs)),
                ))
            }
        }
        impl std::ops::$tr<i64> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: i64) -> Rational {
                Rational(std::ops::$tr::$method(
                    &self.0,
                    BigRational::from_integer(BigInt::from(rhs)),
                ))
            }
        }
        impl std::ops::$tr<Rational> for i64 {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(std::ops::$tr::$method(
                    BigRational::from_integer(BigInt::from(self)),
                    rhs.0,
                ))
            }
        }
        impl std::ops::$tr<&Rational> for i64 {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(std::ops::$tr::$method(
                    BigRational::from_integer(BigInt::from(self)),
                    &rhs.0,
                ))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl std::ops::Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl std::ops::Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `"p/q"`, integers, and finite decimals (`"0.125"`, `"-1.5e-2"`)
/// exactly.
impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if text.is_empty() {
            return Err(ParseRationalError::Empty);
        }
        if let Some((n, d)) = text.split_once('/') {
            let numer = parse_decimal(n.trim(), text)?;
            let denom = parse_decimal(d.trim(), text)?;
            if denom.is_zero() {
                return Err(ParseRationalError::ZeroDenominator(text.to_string()));
            }
            return Ok(Rational(numer / denom));
        }
        parse_decimal(text, text).map(Rational)
    }
}

fn parse_decimal(part: &str, whole: &str) -> Result<BigRational, ParseRationalError> {
    let malformed = || ParseRationalError::Malformed(whole.to_string());
    if part.is_empty() {
        return Err(malformed());
    }
    let (mantissa, exponent) = match part.find(['e', 'E']) {
        Some(idx) => {
            let exp: i32 = part[idx + 1..].parse().map_err(|_| malformed())?;
            (&part[..idx], exp)
        }
        None => (part, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(malformed());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(malformed());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits })
        .map_err(|_| malformed())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A Lebesgue exponent in `(0, ∞]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Exponent::Finite(p) => p.recip().expect("exponent must be nonzero"),
            Exponent::Infinite => Rational::zero(),
        }
    }

    /// Hölder dual `p'` with `1/p + 1/p' = 1`.
    pub fn dual(&self) -> Exponent {
        let inv = Rational::one() - self.reciprocal();
        match inv.recip() {
            Some(p) => Exponent::Finite(p),
            None => Exponent::Infinite,
        }
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }
}

impl From<Rational> for Exponent {
    fn from(p: Rational) -> Self {
        Exponent::Finite(p)
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
            (Exponent::Infinite, _) => Ordering::Greater,
            (_, Exponent::Infinite) => Ordering::Less,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinite);
        }
        s.parse().map(Exponent::Finite).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!("1/2".parse::<Rational>().unwrap(), Rational::new(1, 2));
        assert_eq!("0.125".parse::<Rational>().unwrap(), Rational::new(1, 8));
        assert_eq!("-1.5e-2".parse::<Rational>().unwrap(), Rational::new(-3, 200));
        assert_eq!("3".parse::<Rational>().unwrap(), Rational::integer(3));
        assert_eq!(" 6/4 ".parse::<Rational>().unwrap(), Rational::new(3, 2));
        assert_eq!(".5".parse::<Rational>().unwrap(), Rational::new(1, 2));
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            "1/0".parse::<Rational>(),
            Err(ParseRationalError::ZeroDenominator(_))
        ));
        assert!(matches!("".parse::<Rational>(), Err(ParseRationalError::Empty)));
        assert!("abc".parse::<Rational>().is_err());
        assert!("1/2/3".parse::<Rational>().is_err());
        assert!("1.2.3".parse::<Rational>().is_err());
        assert!(".".parse::<Rational>().is_err());
    }

    #[test]
    fn infinite_exponent_arithmetic() {
        assert!(Exponent::Infinite.reciprocal().is_zero());
        assert_eq!(
            Exponent::Finite(Rational::one()).dual(),
            Exponent::Infinite
        );
        assert_eq!(
            Exponent::Infinite.dual(),
            Exponent::Finite(Rational::one())
        );
        assert_eq!(
            Exponent::Finite(Rational::integer(2)).dual(),
            Exponent::Finite(Rational::integer(2))
        );
        assert!(Exponent::Infinite > Exponent::Finite(Rational::integer(1_000_000)));
    }
}
