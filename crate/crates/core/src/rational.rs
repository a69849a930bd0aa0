//! Exact rational arithmetic helpers.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{CarpoolError, Result};

/// Every value, price and toll in the crate is an exact rational.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Rational {
    Rational::zero()
}

/// Parses `"7"`, `"-1/3"`, `"0.25"`, `"1.5e-2"` without going through floating point.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || CarpoolError::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(CarpoolError::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fraction) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fraction.is_empty() {
        return Err(bad());
    }
    if !whole
        .chars()
        .chain(fraction.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let joined = format!("{whole}{fraction}");
    let numer =
        BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).map_err(|_| bad())?;
    let scale = exponent - fraction.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Canonical `"n/d"` rendering (integers keep the `/1`).
pub fn to_exact_string(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Decimal rendering for humans; not round-trippable.
pub fn to_decimal_string(value: &Rational, digits: usize) -> String {
    let negative = value.is_negative();
    let abs = value.abs();
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (abs.numer() * &scale).div_floor(abs.denom());
    let (whole, rest) = scaled.div_rem(&scale);
    let mut out = String::new();
    if negative && !(whole.is_zero() && rest.is_zero()) {
        out.push('-');
    }
    out.push_str(&whole.to_string());
    if digits > 0 {
        let rest = rest.to_string();
        out.push('.');
        out.push_str(&"0".repeat(digits - rest.len()));
        out.push_str(&rest);
    }
    out
}

/// Least common multiple of the denominators of `values` (1 for an empty input).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// `serialize_with` helper rendering a rational as its exact string.
pub fn serialize<S: serde::Serializer>(
    value: &Rational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&to_exact_string(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/3").unwrap(), frac(1, 3));
        assert_eq!(parse_rational(" -4/6 ").unwrap(), frac(-2, 3));
        assert_eq!(parse_rational("0.25").unwrap(), frac(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), frac(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("1.5e-2").unwrap(), frac(3, 200));
        assert_eq!(parse_rational("2E3").unwrap(), int(2000));
        assert_eq!(parse_rational(".5").unwrap(), frac(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1.2.3", "--1", "e5", "."] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn renders() {
        assert_eq!(to_exact_string(&int(11)), "11/1");
        assert_eq!(to_exact_string(&frac(-1, 2)), "-1/2");
        assert_eq!(to_decimal_string(&frac(1, 3), 4), "0.3333");
        assert_eq!(to_decimal_string(&frac(-7, 2), 2), "-3.50");
        assert_eq!(to_decimal_string(&int(0), 0), "0");
    }

    #[test]
    fn lcm_of_denominators() {
        let vals = [frac(1, 4), frac(5, 6), int(3)];
        assert_eq!(common_denominator(vals.iter()), BigInt::from(12));
    }
}
