//! Exact rates.
//!
//! Arrival and service rates are kept as exact rationals so that `"0.1"`
//! means `1/10` and the rational evaluation mode of the analytic formulas
//! never sees a binary rounding error. Floating views are derived on demand.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(BigRational);

impl Rate {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::Domain(format!("rate must be non-negative, got {value}")));
        }
        Ok(Rate(value))
    }

    pub fn from_integer(value: u64) -> Self {
        Rate(BigRational::from_integer(BigInt::from(value)))
    }

    /// Exact binary value of a finite, non-negative `f64`.
    pub fn from_f64(value: f64) -> Result<Self> {
        let r = BigRational::from_float(value).ok_or_else(|| Error::InvalidNumber(value.to_string()))?;
        Rate::new(r)
    }

    /// Parses a plain decimal literal such as `0.25`, `3`, `1e-2` or a
    /// fraction such as `5/6`.
    pub fn parse_decimal(text: &str) -> Result<Self> {
        Rate::new(parse_exact(text)?)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn into_ratio(self) -> BigRational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Rate::parse_decimal(s)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Exact rational value of a decimal (`-1.25`, `2e3`, `.5`) or fraction
/// (`7/8`) literal.
pub fn parse_exact(text: &str) -> Result<BigRational> {
    let bad = || Error::InvalidNumber(text.to_string());
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_exact(num)?;
        let den = parse_exact(den)?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(num / den);
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }

    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().map_err(|_| bad())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_exact("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_exact("2.50").unwrap(), ratio(5, 2));
        assert_eq!(parse_exact("-.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_exact("7").unwrap(), ratio(7, 1));
        assert_eq!(parse_exact("1e-2").unwrap(), ratio(1, 100));
        assert_eq!(parse_exact("1.5E1").unwrap(), ratio(15, 1));
        assert_eq!(parse_exact("5/6").unwrap(), ratio(5, 6));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", ".", "abc", "1.2.3", "1/0", "0x10", "1e"] {
            assert!(parse_exact(s).is_err(), "{s:?} should not parse");
        }
    }

    #[test]
    fn negative_rate_is_a_domain_error() {
        assert!(matches!(Rate::parse_decimal("-0.5"), Err(Error::Domain(_))));
    }

    #[test]
    fn float_view_rounds_to_nearest() {
        assert_eq!(Rate::parse_decimal("0.2").unwrap().to_f64(), 0.2);
        assert_eq!(Rate::parse_decimal("0.1").unwrap().to_f64(), 0.1);
        assert_eq!(Rate::from_f64(0.7).unwrap().to_f64(), 0.7);
    }
}
