//! Exact time domain: non-negative rationals of arbitrary precision.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number shared by timestamps and numeric values.
pub type Rational = BigRational;

/// A point on the time axis. Never negative, never rounded.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(Rational);

impl Time {
    pub fn zero() -> Self {
        Time(Rational::zero())
    }

    /// Returns `None` for negative values.
    pub fn new(value: Rational) -> Option<Self> {
        if value.is_negative() {
            None
        } else {
            Some(Time(value))
        }
    }

    pub fn from_int(value: u64) -> Self {
        Time(Rational::from_integer(BigInt::from(value)))
    }

    pub fn from_ratio(numer: u64, denom: u64) -> Self {
        assert!(denom != 0, "zero denominator");
        Time(Rational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Adds a strictly positive duration.
    pub fn checked_add(&self, duration: &Rational) -> Option<Time> {
        Time::new(&self.0 + duration)
    }
}

impl Add for &Time {
    type Output = Time;

    fn add(self, rhs: &Time) -> Time {
        Time(&self.0 + &rhs.0)
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Time {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = parse_rational(s).ok_or_else(|| format!("invalid timestamp `{s}`"))?;
        Time::new(value).ok_or_else(|| format!("negative timestamp `{s}`"))
    }
}

/// `Time` extended with a point beyond every finite timestamp.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeOrInfinity {
    Finite(Time),
    Infinite,
}

/// Parses `12`, `-3`, `2.75` or `1/3` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((numer, denom)) = body.split_once('/') {
        let numer = parse_digits(numer)?;
        let denom = parse_digits(denom)?;
        if denom.is_zero() {
            return None;
        }
        Rational::new(numer, denom)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if frac.is_empty() {
            return None;
        }
        let whole = if whole.is_empty() { BigInt::zero() } else { parse_digits(whole)? };
        let frac_digits = parse_digits(frac)?;
        let scale = num_traits::pow(BigInt::from(10u8), frac.len());
        Rational::new(whole * &scale + frac_digits, scale)
    } else {
        Rational::from_integer(parse_digits(body)?)
    };
    Some(if negative { -value } else { value })
}

fn parse_digits(text: &str) -> Option<BigInt> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Canonical text: integers plainly, terminating fractions as decimals,
/// everything else as `p/q`.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let denom = value.denom().clone();
    let mut rest = denom.clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    while rest.is_even() {
        rest /= &two;
        twos += 1;
    }
    while (&rest % &five).is_zero() {
        rest /= &five;
        fives += 1;
    }
    if !rest.is_one() {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let digits = twos.max(fives);
    let scale = num_traits::pow(BigInt::from(10u8), digits);
    let scaled = (value * Rational::from_integer(scale.clone())).to_integer();
    let negative = scaled.is_negative();
    let magnitude = scaled.abs();
    let (whole, frac) = magnitude.div_rem(&scale);
    let frac = format!("{:0>width$}", frac.to_string(), width = digits);
    format!("{}{}.{}", if negative { "-" } else { "" }, whole, frac)
}

/// Lossy conversion used only for diagnostics.
pub fn approx_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}
