//! Serde helpers: arbitrary-precision integers travel as decimal strings,
//! and are accepted on input either as strings or as plain JSON integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Str(String),
    Signed(i64),
    Unsigned(u64),
}

impl IntRepr {
    fn into_bigint<E: serde::de::Error>(self) -> Result<BigInt, E> {
        match self {
            IntRepr::Str(s) => s
                .trim()
                .parse::<BigInt>()
                .map_err(|_| E::custom(format!("not an integer: {s:?}"))),
            IntRepr::Signed(i) => Ok(BigInt::from(i)),
            IntRepr::Unsigned(u) => Ok(BigInt::from(u)),
        }
    }
}

pub fn parse_bigint(s: &str) -> Option<BigInt> {
    s.trim().parse().ok()
}

/// Parses "a", "a/b" or a decimal like "0.5" into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let mut num: BigInt = digits.parse().ok()?;
        if neg {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(num, den));
    }
    Some(BigRational::from_integer(s.parse().ok()?))
}

pub mod bigint_str {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        IntRepr::deserialize(d)?.into_bigint()
    }
}

pub mod vec_bigint_str {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Vec::<IntRepr>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_bigint())
            .collect()
    }
}

pub mod mat_bigint_str {
    use super::*;

    pub fn serialize<S: Serializer>(rows: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Vec::<Vec<IntRepr>>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_iter().map(|x| x.into_bigint()).collect())
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RatRepr {
    Str(String),
    Float(f64),
}

impl RatRepr {
    fn into_rational<E: serde::de::Error>(self) -> Result<BigRational, E> {
        match self {
            RatRepr::Str(s) => parse_rational(&s).ok_or_else(|| E::custom(format!("bad rational {s:?}"))),
            RatRepr::Float(f) => BigRational::from_float(f).ok_or_else(|| E::custom("non-finite rational")),
        }
    }
}

pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        RatRepr::deserialize(d)?.into_rational()
    }
}

pub mod vec_rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<RatRepr>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_rational())
            .collect()
    }
}
