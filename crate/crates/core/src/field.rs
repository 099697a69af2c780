//! Scalar fields the algorithms run over.
//!
//! Most of the crate works in `f64`. The cylinder oracle and the exact
//! splitting checks can also run over [`BigRational`] so that the
//! inequalities they verify are not decided by rounding.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An ordered field with the handful of conversions the crate needs.
pub trait Field: Clone + PartialOrd + fmt::Debug + fmt::Display + Num + Signed + Send + Sync + 'static {
    /// Lift a float. For rationals this goes through the shortest decimal
    /// representation, so `0.9_f64` becomes `9/10` and not the binary value.
    fn from_f64(x: f64) -> Self;
    fn from_exact(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// Slack used when comparing quantities that are equal in exact arithmetic.
    fn tolerance() -> Self;
    fn is_exact() -> bool;

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
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

impl Field for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_exact(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-12
    }

    fn is_exact() -> bool {
        false
    }
}

impl Field for BigRational {
    fn from_f64(x: f64) -> Self {
        // `{:?}` prints the shortest string that round-trips.
        parse_exact(&format!("{x:?}")).unwrap_or_else(|_| BigRational::from_float(x).unwrap_or_else(BigRational::zero))
    }

    fn from_exact(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn is_exact() -> bool {
        true
    }
}

/// Parse `"1/3"`, `"-0.25"`, `"2"`, `"1.5e-3"` or `"3/2e1"` into an exact rational.
pub fn parse_exact(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a number: {text:?}"));
    match text.split_once('/') {
        Some((num, den)) => {
            let num = parse_decimal(num.trim()).ok_or_else(bad)?;
            let den = parse_decimal(den.trim()).ok_or_else(bad)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {text:?}")));
            }
            Ok(num / den)
        }
        None => parse_decimal(text).ok_or_else(bad),
    }
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigInt::parse_bytes(all_digits.as_bytes(), 10).unwrap_or_else(BigInt::zero);
    if negative {
        value = -value;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let ratio = if scale >= 0 {
        BigRational::from_integer(value * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(value, num_traits::pow(ten, (-scale) as usize))
    };
    Some(ratio)
}

/// `base^exp` for any field, by repeated squaring.
pub fn powi<T: Field>(base: &T, mut exp: u32) -> T {
    let mut acc = T::one();
    let mut factor = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * factor.clone();
        }
        factor = factor.clone() * factor;
        exp >>= 1;
    }
    acc
}

pub(crate) fn sum<T: Field>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

pub(crate) fn one<T: Field>() -> T {
    <T as One>::one()
}
