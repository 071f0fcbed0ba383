//! Exact rational helpers and the `"p/q"` string encoding used by every file format.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Canonical `"p/q"` form: reduced, positive denominator, always with a slash.
pub fn format(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"p/q"`, a plain integer, a decimal (`"0.34"`) or scientific
/// notation (`"1e-6"`) into an exact rational.
pub fn parse(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = |msg: &str| Error::parse(format!("rational `{text}`"), msg);
    if s.is_empty() {
        return Err(bad("empty"));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = parse_int(p).ok_or_else(|| bad("numerator is not a decimal integer"))?;
        let q: BigInt = parse_int(q).ok_or_else(|| bad("denominator is not a decimal integer"))?;
        if !q.is_positive() {
            return Err(bad("denominator must be positive"));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad("bad exponent"))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad("no digits"));
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad("not a number"));
    }
    let all: BigInt = format!("{whole}{frac}0").parse::<BigInt>().map_err(|_| bad("not a number"))? / 10;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(all * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(all, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

fn parse_int(s: &str) -> Option<BigInt> {
    let s = s.trim();
    let body = s.strip_prefix('-').unwrap_or(s);
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn to_f64(q: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn in_unit_interval(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}

pub fn is_zero(q: &Rational) -> bool {
    q.is_zero()
}

/// Serde adapter for a single rational as a `"p/q"` string.
pub mod serde_q {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(de::Error::custom)
    }
}

/// Serde adapter for a vector of rationals.
pub mod serde_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let items = Vec::<String>::deserialize(d)?;
        items.iter().map(|t| parse(t).map_err(de::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_notations() {
        assert_eq!(parse("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse("6/8").unwrap(), ratio(3, 4));
        assert_eq!(parse("-2/6").unwrap(), ratio(-1, 3));
        assert_eq!(parse("7").unwrap(), int(7));
        assert_eq!(parse("0.34").unwrap(), ratio(17, 50));
        assert_eq!(parse("1e-6").unwrap(), ratio(1, 1_000_000));
        assert_eq!(parse("2.5E2").unwrap(), int(250));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", "1/0", "1/-3", "a/b", "1.2.3", "--1", "1/", "e5"] {
            assert!(parse(s).is_err(), "{s} should not parse");
        }
    }

    #[test]
    fn formats_reduced() {
        assert_eq!(format(&ratio(6, 8)), "3/4");
        assert_eq!(format(&int(1)), "1/1");
        assert_eq!(format(&ratio(0, 5)), "0/1");
        assert_eq!(format(&ratio(1, -3)), "-1/3");
    }
}
