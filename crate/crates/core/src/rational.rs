//! Exact rationals and their `"num/den"` text form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

/// Parses `"n"`, `"n/d"` or a plain decimal such as `"0.25"` / `"-1.5e-3"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidRational(text.to_string());
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Rational::from_integer(n));
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("{int_part}{frac_part}0").parse().ok()?;
    let scale = frac_part.len() as i32 + 1 - exp;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rational::new(all, num_traits::pow(ten, scale as usize))
    } else {
        Rational::from_integer(all * num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Some(value)
}

/// Canonical text form: always `num/den` with a positive denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Nearest-ish double; falls back to a scaled conversion when the numerator or
/// denominator alone overflows `f64`.
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

pub mod serde_str {
    //! `#[serde(with = ...)]` helper storing a rational as `"num/den"`.
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(de::Error::custom)
    }
}

pub mod serde_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(de::Error::custom))
            .collect()
    }
}
