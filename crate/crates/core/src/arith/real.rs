//! High-precision real values for logarithms and other transcendental
//! quantities (`ln p`, `ln pi`, `ln b_p`) that sit next to exact rationals.
//!
//! Arithmetic runs at roughly twice the configured decimal precision, so the
//! accumulated rounding of any evaluation chain in this crate stays far below
//! the advertised error budget of `10^(5 - digits)` (relative to `max(1, |x|)`).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use astro_float::{BigFloat, Consts, RoundingMode, Sign, Word};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use super::rational::ExactRational;

pub const DEFAULT_DIGITS: usize = 50;

static DIGITS: AtomicUsize = AtomicUsize::new(DEFAULT_DIGITS);

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

/// Sets the process-wide decimal precision. Intended to be called once at
/// start-up, before any values are computed.
pub fn set_precision_digits(digits: usize) {
    DIGITS.store(digits.clamp(20, 1000), AtomicOrdering::Relaxed);
}

pub fn precision_digits() -> usize {
    DIGITS.load(AtomicOrdering::Relaxed)
}

fn working_bits() -> usize {
    let bits = (precision_digits() as f64 * std::f64::consts::LOG2_10).ceil() as usize * 2 + 64;
    bits.div_ceil(64) * 64
}

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Approximated,
}

/// Outcome of comparing two reals under their combined error budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    WithinError,
}

#[derive(Clone)]
pub struct LogValue {
    value: BigFloat,
    provenance: Provenance,
}

impl LogValue {
    fn wrap(value: BigFloat, exact: bool) -> Self {
        assert!(!value.is_nan(), "NaN produced in real arithmetic");
        let provenance = if exact && !value.inexact() {
            Provenance::Exact
        } else {
            Provenance::Approximated
        };
        LogValue { value, provenance }
    }

    fn combine(&self, other: &Self, value: BigFloat) -> Self {
        let exact = self.is_exact() && other.is_exact();
        Self::wrap(value, exact)
    }

    pub fn zero() -> Self {
        Self::from_i64(0)
    }

    pub fn one() -> Self {
        Self::from_i64(1)
    }

    pub fn from_i64(n: i64) -> Self {
        Self::wrap(BigFloat::from_i64(n, working_bits()), true)
    }

    pub fn from_bigint(n: &BigInt) -> Self {
        Self::wrap(bigint_to_float(n, working_bits()), true)
    }

    pub fn from_rational(x: &ExactRational) -> Self {
        let p = working_bits();
        let n = bigint_to_float(x.numer(), p);
        if x.denom().is_one() {
            return Self::wrap(n, true);
        }
        let d = bigint_to_float(x.denom(), p);
        Self::wrap(n.div(&d, p, RM), true)
    }

    pub fn from_f64(x: f64) -> Self {
        Self::wrap(BigFloat::from_f64(x, working_bits()), true)
    }

    /// Parses a decimal or `num/den` literal.
    pub fn parse(s: &str) -> crate::Result<Self> {
        Ok(Self::from_rational(&super::rational::parse(s)?))
    }

    pub fn pi() -> Self {
        let p = working_bits();
        Self::wrap(CONSTS.with(|cc| cc.borrow_mut().pi(p, RM)), false)
    }

    /// Euler's number.
    pub fn e() -> Self {
        Self::one().exp()
    }

    /// Natural logarithm of a positive integer.
    pub fn ln_int(n: u64) -> Self {
        Self::from_i64(n as i64).ln()
    }

    pub fn ln_rational(x: &ExactRational) -> Self {
        Self::from_rational(x).ln()
    }

    pub fn ln(&self) -> Self {
        assert!(self.value.is_positive(), "ln of a non-positive value");
        if self.is_exact() && self.value.cmp(&BigFloat::from_i64(1, working_bits())) == Some(0) {
            return Self::zero();
        }
        let p = working_bits();
        Self::wrap(CONSTS.with(|cc| self.value.ln(p, RM, &mut cc.borrow_mut())), false)
    }

    pub fn exp(&self) -> Self {
        if self.is_exact() && self.value.is_zero() {
            return Self::one();
        }
        let p = working_bits();
        Self::wrap(CONSTS.with(|cc| self.value.exp(p, RM, &mut cc.borrow_mut())), false)
    }

    pub fn powi(&self, n: u32) -> Self {
        let p = working_bits();
        Self::wrap(self.value.powi(n as usize, p, RM), self.is_exact())
    }

    /// `base^exponent` for a positive base and rational exponent, via `exp(e ln b)`.
    pub fn pow_rational(base: &ExactRational, exponent: &ExactRational) -> Self {
        if exponent.is_zero() {
            return Self::one();
        }
        if exponent.denom().is_one() {
            if let Some(k) = exponent.numer().to_u32() {
                return Self::from_rational(&super::rational::pow(base, k));
            }
        }
        (Self::ln_rational(base) * Self::from_rational(exponent)).exp()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.value.abs(), self.is_exact())
    }

    pub fn max(&self, other: &Self) -> Self {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn is_exact(&self) -> bool {
        self.provenance == Provenance::Exact
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative() && !self.value.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Absolute error budget carried by this value.
    pub fn error_bound(&self) -> ExactRational {
        if self.is_exact() {
            return ExactRational::zero();
        }
        let scale = self.to_rational().abs().max(ExactRational::one());
        let exponent = precision_digits() as i32 - 5;
        scale / ExactRational::from_integer(BigInt::from(10).pow(exponent.max(0) as u32))
    }

    /// Exact rational value of the stored binary float.
    pub fn to_rational(&self) -> ExactRational {
        float_to_rational(&self.value)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    /// `lhs <= rhs` tested against the combined error budget of both sides.
    pub fn compare_le(lhs: &Self, rhs: &Self) -> Verdict {
        let gap = rhs.to_rational() - lhs.to_rational();
        let budget = lhs.error_bound() + rhs.error_bound();
        if gap > budget {
            Verdict::Holds
        } else if -gap.clone() > budget {
            Verdict::Fails
        } else if lhs.is_exact() && rhs.is_exact() {
            if gap >= ExactRational::zero() {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        } else {
            Verdict::WithinError
        }
    }

    /// Fixed-point decimal rendering with `frac_digits` digits after the point,
    /// rounded half-to-even from the exact binary value.
    pub fn to_decimal(&self, frac_digits: usize) -> String {
        let x = self.to_rational();
        let scale = BigInt::from(10).pow(frac_digits as u32);
        let scaled = x.abs() * BigRational::from_integer(scale.clone());
        let fl = scaled.floor();
        let rem = &scaled - &fl;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut digits = fl.to_integer();
        if rem > half || (rem == half && (&digits % 2u32) == BigInt::one()) {
            digits += 1;
        }
        let text = digits.to_string();
        let (int_part, frac_part) = if frac_digits == 0 {
            (text, String::new())
        } else if text.len() > frac_digits {
            let (a, b) = text.split_at(text.len() - frac_digits);
            (a.to_string(), b.to_string())
        } else {
            ("0".to_string(), format!("{text:0>frac_digits$}"))
        };
        let sign = if x.is_negative() && !digits.is_zero() { "-" } else { "" };
        if frac_digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    }
}

fn bigint_to_float(n: &BigInt, p: usize) -> BigFloat {
    if n.is_zero() {
        return BigFloat::from_i64(0, p);
    }
    let sign = if n.is_negative() { Sign::Neg } else { Sign::Pos };
    let mag = n.magnitude();
    let bits = mag.bits() as usize;
    let words = bits.div_ceil(64);
    let shifted: BigUint = mag << (words * 64 - bits);
    let mut m: Vec<Word> = shifted.to_u64_digits();
    m.resize(words, 0);
    let f = BigFloat::from_words(&m, sign, bits as i32);
    // Round to working precision (exact when the integer fits).
    let mut f = f;
    f.set_precision(p.max(64), RM).expect("set precision");
    f
}

fn float_to_rational(x: &BigFloat) -> ExactRational {
    let (words, _, sign, exp, _) = x.as_raw_parts().expect("finite value");
    let mut m = BigUint::zero();
    for w in words.iter().rev() {
        m = (m << 64) + BigUint::from(*w);
    }
    if m.is_zero() {
        return ExactRational::zero();
    }
    let shift = exp as i64 - 64 * words.len() as i64;
    let m = BigInt::from(m);
    let magnitude = if shift >= 0 {
        ExactRational::from_integer(m << shift as usize)
    } else {
        ExactRational::new(m, BigInt::one() << (-shift) as usize)
    };
    if sign == Sign::Neg {
        -magnitude
    } else {
        magnitude
    }
}

impl PartialEq for LogValue {
    fn eq(&self, other: &Self) -> bool {
        self.value.cmp(&other.value) == Some(0)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue({}, {:?})", self.to_decimal(12), self.provenance)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(precision_digits());
        f.write_str(&self.to_decimal(digits))
    }
}

impl Serialize for LogValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal(precision_digits()))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:ident) => {
        impl std::ops::$trait<&LogValue> for &LogValue {
            type Output = LogValue;
            fn $method(self, rhs: &LogValue) -> LogValue {
                let v = self.value.$op(&rhs.value, working_bits(), RM);
                self.combine(rhs, v)
            }
        }
        impl std::ops::$trait<LogValue> for LogValue {
            type Output = LogValue;
            fn $method(self, rhs: LogValue) -> LogValue {
                std::ops::$trait::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&LogValue> for LogValue {
            type Output = LogValue;
            fn $method(self, rhs: &LogValue) -> LogValue {
                std::ops::$trait::$method(&self, rhs)
            }
        }
        impl std::ops::$trait<LogValue> for &LogValue {
            type Output = LogValue;
            fn $method(self, rhs: LogValue) -> LogValue {
                std::ops::$trait::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        let exact = self.is_exact();
        LogValue::wrap(BigFloat::neg(&self.value), exact)
    }
}

impl std::ops::Neg for &LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        -(self.clone())
    }
}

impl std::iter::Sum for LogValue {
    fn sum<I: Iterator<Item = LogValue>>(iter: I) -> Self {
        iter.fold(LogValue::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::ratio;

    #[test]
    fn rational_round_trip_is_exact_for_dyadics() {
        let x = ratio(-3, 8);
        let v = LogValue::from_rational(&x);
        assert!(v.is_exact());
        assert_eq!(v.to_rational(), x);
        let big = BigInt::from(10).pow(40) + 7;
        assert_eq!(LogValue::from_bigint(&big).to_rational(), BigRational::from_integer(big));
    }

    #[test]
    fn ln2_to_many_digits() {
        let ln2 = LogValue::ln_int(2);
        assert_eq!(
            ln2.to_decimal(48),
            "0.693147180559945309417232121458176568075500134360"
        );
        assert!(!ln2.is_exact());
        assert_eq!(LogValue::ln_int(1), LogValue::zero());
    }

    #[test]
    fn pi_and_e() {
        assert_eq!(LogValue::pi().to_decimal(20), "3.14159265358979323846");
        assert_eq!(LogValue::e().to_decimal(20), "2.71828182845904523536");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(LogValue::from_rational(&ratio(-1, 8)).to_decimal(2), "-0.12");
        assert_eq!(LogValue::from_rational(&ratio(3, 8)).to_decimal(2), "0.38");
        assert_eq!(LogValue::from_i64(-7).to_decimal(0), "-7");
        assert_eq!(LogValue::from_rational(&ratio(-1, 1000)).to_decimal(2), "0.00");
    }

    #[test]
    fn compare_respects_budget() {
        let a = LogValue::ln_int(3);
        let b = &a + &LogValue::from_rational(&ratio(1, 1_000_000));
        assert_eq!(LogValue::compare_le(&a, &b), Verdict::Holds);
        assert_eq!(LogValue::compare_le(&b, &a), Verdict::Fails);
        assert_eq!(LogValue::compare_le(&a, &a), Verdict::WithinError);
        let one = LogValue::one();
        assert_eq!(LogValue::compare_le(&one, &one), Verdict::Holds);
    }

    #[test]
    fn rational_powers() {
        let v = LogValue::pow_rational(&ratio(5, 1), &ratio(1, 2));
        assert_eq!(v.to_decimal(30), "2.236067977499789696409173668731");
        assert_eq!(LogValue::pow_rational(&ratio(2, 1), &ratio(3, 1)).to_rational(), ratio(8, 1));
    }
}
