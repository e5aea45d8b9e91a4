//! Exact linear combinations of logarithmic atoms (`1`, `ln p`, `ln ln p`,
//! `ln pi`) with rational coefficients.
//!
//! Arakelov degrees, expectation terms and constants are sums of this shape,
//! so identities between them can be checked with zero tolerance before any
//! real number is evaluated.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::primes::{factorize, is_prime};
use crate::error::Error;
use super::rational::{self, ExactRational};
use super::real::LogValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    One,
    LnPrime(u64),
    LnLnPrime(u64),
    LnPi,
}

impl Atom {
    pub fn evaluate(self) -> LogValue {
        match self {
            Atom::One => LogValue::one(),
            Atom::LnPrime(p) => LogValue::ln_int(p),
            Atom::LnLnPrime(p) => LogValue::ln_int(p).ln(),
            Atom::LnPi => LogValue::pi().ln(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::One => f.write_str("1"),
            Atom::LnPrime(p) => write!(f, "ln({p})"),
            Atom::LnLnPrime(p) => write!(f, "ln(ln({p}))"),
            Atom::LnPi => f.write_str("ln(pi)"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogCombination {
    terms: BTreeMap<Atom, ExactRational>,
}

impl LogCombination {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(atom: Atom, coefficient: ExactRational) -> Self {
        let mut c = Self::zero();
        c.add_term(atom, coefficient);
        c
    }

    pub fn constant(c: ExactRational) -> Self {
        Self::atom(Atom::One, c)
    }

    pub fn ln_prime(p: u64) -> Self {
        Self::atom(Atom::LnPrime(p), ExactRational::one())
    }

    /// `ln n` for a positive integer, expanded over its prime factors.
    pub fn ln_int(n: u64) -> Self {
        assert!(n >= 1, "ln of zero");
        let mut c = Self::zero();
        for (p, k) in factorize(n) {
            c.add_term(Atom::LnPrime(p), rational::int(k as i64));
        }
        c
    }

    /// `ln b_p = -1 - ln ln p`, where `b_p = c_p = 1/(e ln p)`.
    pub fn ln_b(p: u64) -> Self {
        let mut c = Self::constant(rational::int(-1));
        c.add_term(Atom::LnLnPrime(p), rational::int(-1));
        c
    }

    pub fn ln_pi() -> Self {
        Self::atom(Atom::LnPi, ExactRational::one())
    }

    pub fn add_term(&mut self, atom: Atom, coefficient: ExactRational) {
        if coefficient.is_zero() {
            return;
        }
        let entry = self.terms.entry(atom).or_insert_with(ExactRational::zero);
        *entry += coefficient;
        if entry.is_zero() {
            self.terms.remove(&atom);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, factor: &ExactRational) {
        for (atom, c) in &other.terms {
            self.add_term(*atom, c * factor);
        }
    }

    pub fn scaled(&self, factor: &ExactRational) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, factor);
        out
    }

    pub fn coefficient(&self, atom: Atom) -> ExactRational {
        self.terms.get(&atom).cloned().unwrap_or_else(ExactRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Atom, &ExactRational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Parses the [`Display`](fmt::Display) form, e.g. `-3 + 1/2*ln(2) + ln(pi)`.
    /// Constants may be integers, `num/den` or decimals; `ln(n)` accepts any
    /// positive integer and is expanded over its prime factors.
    pub fn parse(s: &str) -> crate::Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty log expression".into()));
        }
        let mut out = Self::zero();
        let mut depth = 0i32;
        let mut start = 0;
        let bytes = compact.as_bytes();
        for i in 0..=bytes.len() {
            let at_split = i == bytes.len()
                || (depth == 0 && i > start && (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'*' && bytes[i - 1] != b'/');
            if at_split {
                out += &parse_term(&compact[start..i], s)?;
                start = i;
            }
            if i < bytes.len() {
                match bytes[i] {
                    b'(' => depth += 1,
                    b')' => depth -= 1,
                    _ => {}
                }
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self) -> LogValue {
        self.terms
            .iter()
            .map(|(atom, c)| atom.evaluate() * LogValue::from_rational(c))
            .sum()
    }
}

fn parse_term(term: &str, whole: &str) -> crate::Result<LogCombination> {
    let bad = || Error::Parse(format!("malformed log expression {whole:?}"));
    let (negative, body) = match term.as_bytes().first() {
        Some(b'-') => (true, &term[1..]),
        Some(b'+') => (false, &term[1..]),
        _ => (false, term),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let (coef, atom) = match body.split_once('*') {
        Some((c, a)) => (rational::parse(c).map_err(|_| bad())?, Some(a)),
        None if body.starts_with("ln(") => (ExactRational::one(), Some(body)),
        None => (rational::parse(body).map_err(|_| bad())?, None),
    };
    let coef = if negative { -coef } else { coef };
    let Some(atom) = atom else {
        return Ok(LogCombination::constant(coef));
    };
    let inner = atom
        .strip_prefix("ln(")
        .and_then(|a| a.strip_suffix(')'))
        .ok_or_else(bad)?;
    let base = if inner == "pi" {
        LogCombination::ln_pi()
    } else if let Some(p) = inner.strip_prefix("ln(").and_then(|a| a.strip_suffix(')')) {
        let p: u64 = p.parse().map_err(|_| bad())?;
        if !is_prime(p) {
            return Err(Error::Parse(format!("ln(ln({p})) needs a prime argument")));
        }
        LogCombination::atom(Atom::LnLnPrime(p), ExactRational::one())
    } else {
        let n: u64 = inner.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        LogCombination::ln_int(n)
    };
    Ok(base.scaled(&coef))
}

impl fmt::Display for LogCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (atom, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = rational::format(&c.abs());
            match atom {
                Atom::One => f.write_str(&mag)?,
                _ if c.abs().is_one() => write!(f, "{atom}")?,
                _ => write!(f, "{mag}*{atom}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for LogCombination {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::ops::Add<&LogCombination> for &LogCombination {
    type Output = LogCombination;
    fn add(self, rhs: &LogCombination) -> LogCombination {
        let mut out = self.clone();
        out.add_scaled(rhs, &ExactRational::one());
        out
    }
}

impl std::ops::Sub<&LogCombination> for &LogCombination {
    type Output = LogCombination;
    fn sub(self, rhs: &LogCombination) -> LogCombination {
        let mut out = self.clone();
        out.add_scaled(rhs, &-ExactRational::one());
        out
    }
}

impl std::ops::AddAssign<&LogCombination> for LogCombination {
    fn add_assign(&mut self, rhs: &LogCombination) {
        self.add_scaled(rhs, &ExactRational::one());
    }
}

impl std::ops::Neg for &LogCombination {
    type Output = LogCombination;
    fn neg(self) -> LogCombination {
        self.scaled(&-ExactRational::one())
    }
}

impl std::iter::Sum for LogCombination {
    fn sum<I: Iterator<Item = LogCombination>>(iter: I) -> Self {
        iter.fold(LogCombination::zero(), |mut a, b| {
            a += &b;
            a
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::ratio;

    #[test]
    fn ln_of_composites_expands() {
        let c = LogCombination::ln_int(12);
        assert_eq!(c.coefficient(Atom::LnPrime(2)), rational::int(2));
        assert_eq!(c.coefficient(Atom::LnPrime(3)), rational::int(1));
        assert!(LogCombination::ln_int(1).is_zero());
    }

    #[test]
    fn cancellation_removes_atoms() {
        let a = LogCombination::ln_prime(5).scaled(&ratio(3, 4));
        let b = LogCombination::ln_prime(5).scaled(&ratio(3, 4));
        assert!((&a - &b).is_zero());
    }

    #[test]
    fn evaluation_matches_reals() {
        let c = LogCombination::ln_b(5);
        let direct = -(LogValue::one() + LogValue::ln_int(5).ln());
        assert_eq!(c.evaluate().to_decimal(40), direct.to_decimal(40));
        assert_eq!(c.evaluate().to_decimal(12), "-1.475884995327");
    }

    #[test]
    fn parse_round_trip() {
        let mut c = LogCombination::ln_b(7).scaled(&ratio(-5, 3));
        c.add_term(Atom::LnPi, ratio(2, 1));
        c.add_term(Atom::LnPrime(2), ratio(-1, 4));
        assert_eq!(LogCombination::parse(&c.to_string()).unwrap(), c);
        assert_eq!(LogCombination::parse("ln(12)").unwrap(), LogCombination::ln_int(12));
        assert_eq!(
            LogCombination::parse("12.5").unwrap(),
            LogCombination::constant(ratio(25, 2))
        );
        assert_eq!(LogCombination::parse("0").unwrap(), LogCombination::zero());
        assert!(LogCombination::parse("ln(ln(4))").is_err());
        assert!(LogCombination::parse("2*").is_err());
        assert!(LogCombination::parse("").is_err());
    }

    #[test]
    fn display() {
        let mut c = LogCombination::ln_prime(2).scaled(&ratio(1, 2));
        c.add_term(Atom::One, ratio(-3, 1));
        assert_eq!(c.to_string(), "-3 + 1/2*ln(2)");
    }
}
