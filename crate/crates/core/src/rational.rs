//! Exact rational helpers: parsing, rendering and the `Probability` newtype.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Arbitrary-precision rational used for every bound computed by the engines.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `p/q`, an integer, or a decimal literal (`0.85` becomes `17/20`).
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::Number(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if neg { -value } else { value })
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Round-half-up to `places` decimal places, rendered with exactly that many digits.
pub fn format_decimal(r: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = r * Rational::from_integer(scale.clone()) + ratio(1, 2);
    let rounded = scaled.floor().to_integer();
    let neg = rounded.is_negative();
    let (whole, frac) = rounded.abs().div_rem(&scale);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{whole}");
    }
    format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = places)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact conversion of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

/// A rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(Rational);

impl Probability {
    pub fn new(value: Rational) -> Result<Self, Error> {
        if value.is_negative() || value > Rational::one() {
            return Err(Error::OutOfRange(format_rational(&value)));
        }
        Ok(Probability(value))
    }

    pub fn zero() -> Self {
        Probability(Rational::zero())
    }

    pub fn one() -> Self {
        Probability(Rational::one())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Probability::new(parse_rational(s)?)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl From<Probability> for Rational {
    fn from(p: Probability) -> Rational {
        p.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_parse_exactly() {
        assert_eq!(parse_rational("0.85").unwrap(), ratio(17, 20));
        assert_eq!(parse_rational("1").unwrap(), one());
        assert_eq!(parse_rational("1.0").unwrap(), one());
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("3/10").unwrap(), ratio(3, 10));
        assert_eq!(parse_rational("-0.25").unwrap(), ratio(-1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("0.8.1").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn rendering() {
        assert_eq!(format_rational(&ratio(18, 25)), "18/25");
        assert_eq!(format_rational(&one()), "1");
        assert_eq!(format_decimal(&ratio(18, 25), 4), "0.7200");
        assert_eq!(format_decimal(&ratio(1, 3), 4), "0.3333");
        assert_eq!(format_decimal(&ratio(2, 3), 4), "0.6667");
        // half-up at the boundary
        assert_eq!(format_decimal(&ratio(5, 100_000), 4), "0.0001");
        assert_eq!(format_decimal(&ratio(19, 3), 4), "6.3333");
        assert_eq!(format_decimal(&one(), 4), "1.0000");
    }

    #[test]
    fn probability_range() {
        assert!(Probability::new(ratio(3, 2)).is_err());
        assert!(Probability::new(ratio(-1, 2)).is_err());
        assert_eq!("0.9".parse::<Probability>().unwrap().value(), &ratio(9, 10));
    }
}
