//! Exact rationals. Every valuation, probability and rational constant in the
//! engine is carried as a [`ExactRational`] in lowest terms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type ExactRational = BigRational;

pub fn ratio(num: i64, den: i64) -> ExactRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> ExactRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact floor as an integer.
pub fn floor(x: &ExactRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn floor_i64(x: &ExactRational) -> i64 {
    i64::try_from(floor(x)).expect("floor out of i64 range")
}

/// `base^exp` for a non-negative exponent, exactly.
pub fn pow(base: &ExactRational, exp: u32) -> ExactRational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Formats as `num/den`, or `num` when the denominator is one.
pub fn format(x: &ExactRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `num/den`, `num`, or a terminating decimal such as `0.25`.
pub fn parse(s: &str) -> Result<ExactRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole.parse().map_err(|_| bad())?
        };
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let magnitude = BigRational::new(whole.abs() * &scale + frac, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// p-adic valuation of a nonzero integer.
pub fn ord_p_int(n: &BigInt, p: u64) -> u32 {
    assert!(!n.is_zero(), "ord_p of zero");
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn ord_p(x: &ExactRational, p: u64) -> i64 {
    ord_p_int(x.numer(), p) as i64 - ord_p_int(x.denom(), p) as i64
}

pub fn ord_p_u64(mut n: u64, p: u64) -> u32 {
    assert!(n != 0, "ord_p of zero");
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Serde adapter storing rationals as `"num/den"` strings.
pub mod serde_str {
    use super::ExactRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &ExactRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ExactRational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}
