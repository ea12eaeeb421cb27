//! Numeric backends for monetary quantities.
//!
//! Every algorithm in the crate is generic over [`Scalar`]. Two backends are
//! provided: [`Rational`] (exact, arbitrary precision, the default) and `f64`
//! (fast, all comparisons use the absolute tolerance [`FLOAT_TOLERANCE`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::ParseAmountError;

/// Absolute tolerance used by every comparison in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Exact rational number used in exact mode.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum
{
    /// `true` for exact arithmetic; comparisons are then tolerance-free.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(value: i64) -> Self;
    fn from_ratio(numer: i64, denom: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn from_f64(value: f64) -> Self;

    /// Parses `"22/10"`, `"2.2"`, `"-3"` and similar without precision loss
    /// in exact mode.
    fn parse_amount(text: &str) -> Result<Self, ParseAmountError>;

    /// Canonical textual form; `parse_amount` inverts it exactly.
    fn to_canonical(&self) -> String;

    fn tol_eq(&self, other: &Self) -> bool;
    /// `self < other`, beyond tolerance.
    fn tol_lt(&self, other: &Self) -> bool;

    fn tol_le(&self, other: &Self) -> bool {
        !other.tol_lt(self)
    }
    fn tol_gt(&self, other: &Self) -> bool {
        other.tol_lt(self)
    }
    fn tol_ge(&self, other: &Self) -> bool {
        !self.tol_lt(other)
    }
    fn is_zero_tol(&self) -> bool {
        self.tol_eq(&Self::zero())
    }
    fn is_positive_tol(&self) -> bool {
        Self::zero().tol_lt(self)
    }
    fn is_negative_tol(&self) -> bool {
        self.tol_lt(&Self::zero())
    }
    fn is_finite_value(&self) -> bool {
        true
    }

    fn abs_value(&self) -> Self {
        if self.is_negative_tol() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

fn split_sign(text: &str) -> (bool, &str) {
    match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    }
}

fn parse_decimal(text: &str) -> Result<Rational, ParseAmountError> {
    let bad = || ParseAmountError::new(text);
    let (negative, body) = split_sign(text.trim());
    if body.is_empty() {
        return Err(bad());
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let denom = num::pow(BigInt::from(10u8), frac_part.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_int(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational::new(BigInt::from(numer), BigInt::from(denom))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(value: f64) -> Self {
        Rational::from_float(value).unwrap_or_else(Zero::zero)
    }

    fn parse_amount(text: &str) -> Result<Self, ParseAmountError> {
        let trimmed = text.trim();
        match trimmed.split_once('/') {
            Some((n, d)) => {
                let numer = parse_decimal(n)?;
                let denom = parse_decimal(d)?;
                if denom.is_zero() {
                    return Err(ParseAmountError::new(text));
                }
                Ok(numer / denom)
            }
            None => parse_decimal(trimmed),
        }
    }

    fn to_canonical(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn tol_eq(&self, other: &Self) -> bool {
        self == other
    }
    fn tol_lt(&self, other: &Self) -> bool {
        self < other
    }
    fn is_zero_tol(&self) -> bool {
        self.is_zero()
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(value: i64) -> Self {
        value as f64
    }
    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(value: f64) -> Self {
        value
    }

    fn parse_amount(text: &str) -> Result<Self, ParseAmountError> {
        let exact = Rational::parse_amount(text)?;
        Ok(Scalar::to_f64(&exact))
    }

    fn to_canonical(&self) -> String {
        format!("{self}")
    }

    fn tol_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= FLOAT_TOLERANCE
    }
    fn tol_lt(&self, other: &Self) -> bool {
        *self < *other - FLOAT_TOLERANCE
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
    fn abs_value(&self) -> Self {
        self.abs()
    }
}

/// Shorthand for exact `numer / denom`.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::from_ratio(numer, denom)
}

/// Shorthand for an exact integer.
pub fn int(value: i64) -> Rational {
    Rational::from_int(value)
}

/// Converts between backends. Anything involving a float passes through `f64`.
pub fn convert<A: Scalar, B: Scalar>(value: &A) -> B {
    if A::EXACT && B::EXACT {
        B::parse_amount(&value.to_canonical()).expect("canonical form parses")
    } else {
        B::from_f64(value.to_f64())
    }
}
