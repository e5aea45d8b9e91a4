//! Invariants of a finite extension `K/Q_p`: different exponent, log-image
//! radius and log-shell radius. Radii are returned as `ln R`.

use num_traits::Zero;
use serde::Serialize;

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::LogValue;
use crate::arith::primes::is_prime;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalFieldData {
    pub p: u64,
    pub e: u64,
    pub f: u64,
    #[serde(with = "rational::serde_str")]
    pub diff_exp: ExactRational,
    pub wild: bool,
}

impl LocalFieldData {
    /// A field whose different exponent is the Eisenstein default.
    pub fn new(p: u64, e: u64, f: u64) -> Result<Self> {
        Self::with_diff(p, e, f, diff_exponent_eisenstein(e, p))
    }

    /// A field with a supplied different exponent, checked against the
    /// tame lower bound.
    pub fn with_diff(p: u64, e: u64, f: u64, diff_exp: ExactRational) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if e == 0 || f == 0 {
            return Err(Error::Domain("e and f must be positive".into()));
        }
        let wild = e % p == 0;
        let tame = rational::ratio(e as i64 - 1, e as i64);
        if diff_exp < tame {
            return Err(Error::Input(format!(
                "different exponent {} is below (e-1)/e = {}",
                rational::format(&diff_exp),
                rational::format(&tame)
            )));
        }
        if !wild && diff_exp != tame {
            return Err(Error::Input(format!(
                "tame field (p={p}, e={e}) must have different exponent {}, got {}",
                rational::format(&tame),
                rational::format(&diff_exp)
            )));
        }
        Ok(LocalFieldData { p, e, f, diff_exp, wild })
    }

    pub fn unramified(p: u64) -> Self {
        LocalFieldData {
            p,
            e: 1,
            f: 1,
            diff_exp: ExactRational::zero(),
            wild: false,
        }
    }

    pub fn degree(&self) -> u64 {
        self.e * self.f
    }

    pub fn is_unramified(&self) -> bool {
        self.e == 1
    }
}

/// `ord_p(e) + (e-1)/e`, the exponent of the different `(e pi^{e-1})` of
/// `x^e - p`-type Eisenstein extensions.
pub fn diff_exponent_eisenstein(e: u64, p: u64) -> ExactRational {
    assert!(e >= 1, "ramification index must be positive");
    rational::int(rational::ord_p_u64(e, p) as i64) + rational::ratio(e as i64 - 1, e as i64)
}

/// `e < p - 1`. Never true at `p = 2`.
pub fn is_small(field: &LocalFieldData) -> bool {
    field.e + 1 < field.p
}

/// `ln R` of the disc containing `log(O_K^x)`: `-(1/e) ln p` for small
/// fields, otherwise `ln e + ln b_p` with `b_p = 1/(e ln p)`.
pub fn log_image_radius_expr(field: &LocalFieldData) -> LogCombination {
    if is_small(field) {
        return LogCombination::atom(
            Atom::LnPrime(field.p),
            -rational::ratio(1, field.e as i64),
        );
    }
    &LogCombination::ln_int(field.e) + &LogCombination::ln_b(field.p)
}

pub fn log_image_radius(field: &LocalFieldData) -> LogValue {
    log_image_radius_expr(field).evaluate()
}

/// `ln R` of the log-shell `(1/2p) log(O_K^x)`.
pub fn log_shell_radius_expr(field: &LocalFieldData) -> LogCombination {
    let k = rational::ord_p_u64(2, field.p) as i64 + 1;
    let mut c = log_image_radius_expr(field);
    c.add_term(Atom::LnPrime(field.p), rational::int(k));
    c
}

pub fn log_shell_radius(field: &LocalFieldData) -> LogValue {
    log_shell_radius_expr(field).evaluate()
}

/// `ln b_p = ln c_p = -1 - ln ln p`.
pub fn ln_b(p: u64) -> LogValue {
    LogCombination::ln_b(p).evaluate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes::prime_sieve;
    use crate::arith::rational::{int, ratio};
    use crate::padic_oracle::TruncatedEisensteinRing;

    #[test]
    fn diff_examples() {
        assert_eq!(diff_exponent_eisenstein(1, 7), int(0));
        assert_eq!(diff_exponent_eisenstein(3, 5), ratio(2, 3));
        assert_eq!(diff_exponent_eisenstein(5, 5), ratio(9, 5));
    }

    #[test]
    fn small_predicate() {
        assert!(is_small(&LocalFieldData::new(5, 3, 1).unwrap()));
        assert!(!is_small(&LocalFieldData::new(3, 2, 1).unwrap()));
        assert!(!is_small(&LocalFieldData::new(2, 1, 1).unwrap()));
    }

    #[test]
    fn radius_examples() {
        let f = LocalFieldData::new(5, 1, 1).unwrap();
        assert_eq!(log_image_radius(&f).to_decimal(30), (-LogValue::ln_int(5)).to_decimal(30));
        assert_eq!(log_shell_radius(&f).to_decimal(30), "0.000000000000000000000000000000");
        let f = LocalFieldData::new(2, 1, 1).unwrap();
        assert_eq!(log_image_radius(&f).to_decimal(6), "-0.633487");
        let shell = LogValue::from_i64(2) * LogValue::ln_int(2) + ln_b(2);
        assert_eq!(log_shell_radius(&f).to_decimal(30), shell.to_decimal(30));
        let f = LocalFieldData::new(3, 6, 1).unwrap();
        assert_eq!(log_image_radius(&f).to_decimal(6), "0.697712");
    }

    #[test]
    fn supplied_diff_is_checked() {
        assert!(LocalFieldData::with_diff(5, 3, 1, ratio(1, 2)).is_err());
        assert!(LocalFieldData::with_diff(5, 3, 1, int(1)).is_err());
        assert!(LocalFieldData::with_diff(3, 3, 1, ratio(5, 3)).is_ok());
    }

    #[test]
    fn shell_contains_image_and_integers() {
        for p in prime_sieve(100).unwrap() {
            for e in 1..=20 {
                let f = LocalFieldData::new(p, e, 1).unwrap();
                let shell = log_shell_radius(&f);
                assert!(!shell.is_negative(), "p={p} e={e}");
                assert!(shell >= log_image_radius(&f), "p={p} e={e}");
            }
        }
    }

    #[test]
    fn small_unramified_odd_shell_is_trivial() {
        for p in [3, 5, 7, 11, 101] {
            let f = LocalFieldData::new(p, 1, 1).unwrap();
            assert!(log_shell_radius_expr(&f).is_zero());
        }
    }

    #[test]
    fn diff_monotone_within_fixed_wildness() {
        for p in [2, 3, 5, 7] {
            for e in 1..=30 {
                for e2 in e + 1..=30 {
                    if rational::ord_p_u64(e, p) == rational::ord_p_u64(e2, p) {
                        assert!(diff_exponent_eisenstein(e, p) <= diff_exponent_eisenstein(e2, p));
                    }
                }
            }
        }
        // The ord_p(e) jump makes the formula non-monotone across wild indices.
        assert!(diff_exponent_eisenstein(2, 2) > diff_exponent_eisenstein(3, 2));
    }

    #[test]
    fn tame_diff_matches_oracle() {
        for p in [5u64, 7, 13] {
            for e in 1..p {
                if (p - 1) % e != 0 {
                    continue;
                }
                let r = TruncatedEisensteinRing::new(p, e as u32, 8).unwrap();
                let fprime = r.scale(&r.uniformizer_pow(e as u32 - 1), e);
                assert_eq!(r.valuation(&fprime).unwrap(), diff_exponent_eisenstein(e, p));
            }
        }
    }
}
