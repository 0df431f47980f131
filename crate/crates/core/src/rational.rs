//! Fraction-string helpers for exact rationals.
//!
//! Every exact quantity in this crate is a [`BigRational`]. On the wire they
//! travel as decimal-free fraction strings: `"p/q"` in lowest terms with a
//! positive denominator, or plain `"p"` when the denominator is one.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational used for all exact arithmetic.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid fraction string {input:?}: {reason}")]
pub struct ParseFractionError {
    pub input: String,
    pub reason: &'static str,
}

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"p"`, `"-p"`, `"p/q"` (whitespace around the slash is allowed).
/// Decimal points and exponents are rejected.
pub fn parse_fraction(s: &str) -> Result<Q, ParseFractionError> {
    let err = |reason| ParseFractionError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let is_int = |x: &str| {
        let digits = x.strip_prefix(['-', '+']).unwrap_or(x);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !is_int(num) || !is_int(den) {
        return Err(err("expected integer or p/q"));
    }
    let n: BigInt = num.parse().map_err(|_| err("bad numerator"))?;
    let d: BigInt = den.parse().map_err(|_| err("bad denominator"))?;
    if d.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Q::new(n, d))
}

/// Renders in lowest terms: `"p"` or `"p/q"`.
pub fn format_fraction(x: &Q) -> String {
    FractionDisplay(x).to_string()
}

/// `Display` adapter for [`format_fraction`].
pub struct FractionDisplay<'a>(pub &'a Q);

impl fmt::Display for FractionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // BigRational is always normalized with a positive denominator.
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Lossy conversion for reporting. Exact paths never go through this.
pub fn to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Largest integer `<= x`.
pub fn floor_i64(x: &Q) -> Option<i64> {
    use num_traits::ToPrimitive;
    x.floor().to_integer().to_i64()
}

/// `serde(with = ...)` adapter for a single rational as a fraction string.
pub mod serde_fraction {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&FractionDisplay(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse_fraction(&s).map_err(D::Error::custom)
    }
}

/// `serde(with = ...)` adapter for a vector of fraction strings.
pub mod serde_fraction_vec {
    use super::*;
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_fraction(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_fraction(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serializes an `f64` as a JSON number with 17 significant digits.
pub mod serde_f64_17 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn render(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".to_string()
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(render(*x)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<f64>::deserialize(d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_normalizes() {
        assert_eq!(parse_fraction("2/4").unwrap(), q(1, 2));
        assert_eq!(parse_fraction(" -3 / 6 ").unwrap(), q(-1, 2));
        assert_eq!(parse_fraction("7").unwrap(), qi(7));
        assert_eq!(parse_fraction("5/-10").unwrap(), q(-1, 2));
    }

    #[test]
    fn rejects_decimals_and_garbage() {
        for bad in ["", "0.5", "1e3", "1/0", "a/b", "1//2", "/2", "-"] {
            assert!(parse_fraction(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_fraction(&q(2400, 11)), "2400/11");
        assert_eq!(format_fraction(&q(-6, 3)), "-2");
        assert_eq!(format_fraction(&qi(0)), "0");
    }

    #[test]
    fn float_rendering_has_17_digits() {
        let s = serde_f64_17::render(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
