//! Exact rational scalars and their `"p/q"` string form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

use crate::error::ToricError;

pub type Rational = BigRational;
pub type RationalVector = Vec<Rational>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`. The result is reduced with a positive denominator.
pub fn parse_rational(s: &str) -> Result<Rational, ToricError> {
    let bad = || ToricError::Input(format!("malformed rational {s:?}"));
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| bad())?;
    let d = BigInt::from_str(den).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(ToricError::Input(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

/// `"p/q"`, or `"p"` when the value is an integer.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator beyond f64 range: fall back to a scaled quotient
        let shift = r.denom().bits().max(r.numer().bits()) as i64 - 1000;
        let scale = BigInt::one() << shift.max(0) as usize;
        let n = (r.numer() / &scale).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() / &scale).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_int(a: &[BigInt], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .map(|(x, y)| Rational::from_integer(x.clone()) * y)
        .sum()
}

pub fn is_integer(r: &Rational) -> bool {
    r.is_integer()
}

pub fn min_max<'a, I: IntoIterator<Item = &'a Rational>>(it: I) -> Option<(Rational, Rational)> {
    let mut out: Option<(Rational, Rational)> = None;
    for x in it {
        out = Some(match out {
            None => (x.clone(), x.clone()),
            Some((lo, hi)) => (
                if x < &lo { x.clone() } else { lo },
                if x > &hi { x.clone() } else { hi },
            ),
        });
    }
    out
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// Serde adapters that write rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
