//! Exact rational helpers.
//!
//! Every size, capacity, rate and time in this crate is a [`Rat`]. Text form is
//! `"p/q"` (or a bare integer); writers always emit the reduced fraction.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// Integer-valued rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `num / den`, reduced. Panics on a zero denominator.
pub fn frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// Smallest integer `>= x`.
pub fn ceil(x: &Rat) -> Rat {
    x.ceil()
}

/// Largest integer `<= x`.
pub fn floor(x: &Rat) -> Rat {
    x.floor()
}

/// `ceil(x)` as a machine count. Negative inputs clamp to zero.
pub fn ceil_count(x: &Rat) -> u64 {
    if !x.is_positive() {
        return 0;
    }
    x.ceil().to_integer().to_u64().expect("count fits in u64")
}

/// `8^n` for any integer `n`.
pub fn pow8(n: i32) -> Rat {
    let eight = int(8);
    if n >= 0 {
        num_traits::pow(eight, n as usize)
    } else {
        num_traits::pow(eight, n.unsigned_abs() as usize).recip()
    }
}

/// Exponent `n` such that `x == 8^n`, if any.
pub fn log8_exact(x: &Rat) -> Option<i32> {
    if !x.is_positive() {
        return None;
    }
    let (numer, denom) = (x.numer(), x.denom());
    let (big, n_sign) = if denom.is_one() {
        (numer.clone(), 1)
    } else if numer.is_one() {
        (denom.clone(), -1)
    } else {
        return None;
    };
    let eight = BigInt::from(8);
    let mut rest = big;
    let mut n = 0i32;
    while rest > BigInt::one() {
        let (q, r) = rest.div_rem(&eight);
        if !r.is_zero() {
            return None;
        }
        rest = q;
        n += 1;
    }
    Some(n * n_sign)
}

/// Lossy conversion for reporting only.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Canonical text form: `"p"` when integral, otherwise `"p/q"`.
pub fn to_text(x: &Rat) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRatError(pub String);

impl fmt::Display for ParseRatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational `{}`", self.0)
    }
}

impl std::error::Error for ParseRatError {}

/// Parses `"p/q"`, `"p"` or a plain decimal literal such as `"12.5"`.
pub fn parse(text: &str) -> Result<Rat, ParseRatError> {
    let s = text.trim();
    let err = || ParseRatError(text.to_string());
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((whole, fractional)) = s.split_once('.') {
        if fractional.is_empty() || !fractional.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" { "0" } else { whole };
        let w = BigInt::from_str(whole).map_err(|_| err())?;
        let f = BigInt::from_str(fractional).map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10), fractional.len());
        let magnitude = Rat::new(w.abs() * &scale + f, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    BigInt::from_str(s).map(Rat::from_integer).map_err(|_| err())
}

/// Serde adapter: accepts `"p/q"` strings or JSON integers, writes `"p/q"`.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_text(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        d.deserialize_any(RatVisitor)
    }

    struct RatVisitor;

    impl<'de> Visitor<'de> for RatVisitor {
        type Value = Rat;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a rational as \"p/q\" or an integer")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
            Ok(Rat::from_integer(BigInt::from(v)))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rat, E> {
            Err(E::custom(format!(
                "floating-point literal {v} is not accepted; write it as \"p/q\""
            )))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
            parse(v).map_err(E::custom)
        }
    }
}
