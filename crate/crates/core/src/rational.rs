//! Exact rational numbers and their text forms.
//!
//! Budgets, flows and LP values are all carried as [`Rational`]. Text input
//! accepts `"num/den"`, plain integers and finite decimals (`"0.7"`); decimals
//! are converted digit by digit so no binary float ever touches a value.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{input}` as a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse(input: &str) -> Result<Rational, ParseRationalError> {
    let s = input.trim();
    let err = |reason| ParseRationalError {
        input: input.to_string(),
        reason,
    };
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = d.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, fraction) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && fraction.is_empty() {
        return Err(err("no digits"));
    }
    if !whole.chars().chain(fraction.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("unexpected character"));
    }
    let digits = format!("{whole}{fraction}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| err("bad digits"))?
    };
    let den = num_traits::pow(BigInt::from(10u32), fraction.len());
    let value = Rational::new(num, den);
    Ok(if negative { -value } else { value })
}

/// Finite decimal expansion of `value`, if its reduced denominator has no
/// prime factors other than 2 and 5.
pub fn to_decimal(value: &Rational) -> Option<String> {
    let mut den = value.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0usize;
    let mut fives = 0usize;
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    if places == 0 {
        return Some(value.numer().to_string());
    }
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let scaled = (value * Rational::from_integer(scale)).to_integer();
    let negative = scaled.is_negative();
    let mut digits = scaled.abs().to_string();
    if digits.len() <= places {
        digits = format!("{}{}", "0".repeat(places + 1 - digits.len()), digits);
    }
    let (w, f) = digits.split_at(digits.len() - places);
    let f = f.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    Some(if f.is_empty() {
        format!("{sign}{w}")
    } else {
        format!("{sign}{w}.{f}")
    })
}

/// Canonical text form: decimal when exact, `num/den` otherwise.
pub fn render(value: &Rational) -> String {
    to_decimal(value).unwrap_or_else(|| format!("{}/{}", value.numer(), value.denom()))
}

/// Always `num/den` (or a bare integer).
pub fn render_fraction(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter: serialises as the canonical string, accepts strings or JSON numbers.
pub mod serde_text {
    use super::*;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&render(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"num/den\", a decimal string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                parse(v).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from_integer(BigInt::from(v)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_integer(BigInt::from(v)))
            }
            fn visit_f64<E: de::Error>(self, _: f64) -> Result<Rational, E> {
                Err(E::custom(
                    "floating point literal; write the value as a string for exact parsing",
                ))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse("0.7").unwrap(), frac(7, 10));
        assert_eq!(parse("-1.25").unwrap(), frac(-5, 4));
        assert_eq!(parse(".5").unwrap(), frac(1, 2));
        assert_eq!(parse("3").unwrap(), int(3));
        assert_eq!(parse("2/6").unwrap(), frac(1, 3));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("1e3").is_err());
        assert!(parse(".").is_err());
    }

    #[test]
    fn renders_decimal_only_when_exact() {
        assert_eq!(render(&frac(7, 10)), "0.7");
        assert_eq!(render(&frac(1, 3)), "1/3");
        assert_eq!(render(&frac(-1, 40)), "-0.025");
        assert_eq!(render(&int(12)), "12");
        assert_eq!(render_fraction(&frac(3, 4)), "3/4");
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(n in -100_000i64..100_000, d in 1i64..5_000) {
            let v = frac(n, d);
            prop_assert_eq!(parse(&render(&v)).unwrap(), v.clone());
            prop_assert_eq!(parse(&render_fraction(&v)).unwrap(), v);
        }
    }
}
