//! Prime sieving and the elementary arithmetic functions used by the bounds.

use crate::error::{Error, Result};

use super::real::LogValue;

pub const DEFAULT_SIEVE_CEILING: u64 = 100_000_000;

/// Environment variable overriding [`DEFAULT_SIEVE_CEILING`].
pub const SIEVE_CEILING_ENV: &str = "SZPIRO_SIEVE_CEILING";

pub fn sieve_ceiling() -> u64 {
    std::env::var(SIEVE_CEILING_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SIEVE_CEILING)
}

fn check_ceiling(n: u64) -> Result<()> {
    let ceiling = sieve_ceiling();
    if n > ceiling {
        return Err(Error::Resource(format!(
            "sieve bound {n} exceeds the configured ceiling {ceiling} (set {SIEVE_CEILING_ENV} to raise it)"
        )));
    }
    Ok(())
}

/// Odd-only sieve of Eratosthenes: bit `i` stands for `2i + 1`.
struct OddSieve {
    limit: u64,
    composite: Vec<u64>,
}

impl OddSieve {
    fn new(limit: u64) -> Self {
        let slots = (limit / 2 + 1) as usize;
        let mut composite = vec![0u64; slots.div_ceil(64)];
        // 1 is not prime.
        composite[0] |= 1;
        let mut i = 3u64;
        while i * i <= limit {
            if composite[(i / 2 / 64) as usize] >> ((i / 2) % 64) & 1 == 0 {
                let mut j = i * i;
                while j <= limit {
                    let k = j / 2;
                    composite[(k / 64) as usize] |= 1 << (k % 64);
                    j += 2 * i;
                }
            }
            i += 2;
        }
        OddSieve { limit, composite }
    }

    fn is_odd_prime(&self, n: u64) -> bool {
        let k = n / 2;
        self.composite[(k / 64) as usize] >> (k % 64) & 1 == 0
    }

    fn odd_primes(&self) -> impl Iterator<Item = u64> + '_ {
        (3..=self.limit).step_by(2).filter(|&n| self.is_odd_prime(n))
    }
}

/// All primes `<= n`, in increasing order.
pub fn prime_sieve(n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::Domain(format!("prime_sieve needs n >= 2, got {n}")));
    }
    check_ceiling(n)?;
    let sieve = OddSieve::new(n);
    Ok(std::iter::once(2).chain(sieve.odd_primes()).collect())
}

/// Exact prime-counting function.
pub fn pi_exact(x: u64) -> Result<u64> {
    if x == 0 {
        return Err(Error::Domain("pi_exact needs x >= 1".into()));
    }
    if x < 2 {
        return Ok(0);
    }
    check_ceiling(x)?;
    let sieve = OddSieve::new(x);
    Ok(1 + sieve.odd_primes().count() as u64)
}

/// Upper bound `x/ln x * (1 + 1.3/ln x)` for `pi(x)`, valid for `x > 1`.
pub fn dusart_bound(x: &LogValue) -> Result<LogValue> {
    if *x <= LogValue::one() {
        return Err(Error::Domain(format!("dusart_bound needs x > 1, got {x:.6}")));
    }
    let ln_x = x.ln();
    let c = LogValue::parse("1.3")?;
    Ok((x / &ln_x) * (LogValue::one() + c / &ln_x))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Trial-division factorization into `(prime, exponent)` pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize(0)");
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut k = 0;
            while n % d == 0 {
                n /= d;
                k += 1;
            }
            out.push((d, k));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Product of the distinct primes dividing `n`; `rad(1) = 1`.
pub fn rad(n: u64) -> u64 {
    factorize(n).iter().map(|&(p, _)| p).product()
}

/// Number of distinct prime divisors (not the divisor-count function).
pub fn omega_distinct(n: u64) -> u32 {
    factorize(n).len() as u32
}

/// `#GL_2(F_q) = q(q-1)(q^2-1)` for a prime power `q`.
pub fn gl2_field_order(q: u64) -> Result<u128> {
    let f = factorize(q.max(1));
    if q < 2 || f.len() != 1 {
        return Err(Error::Domain(format!("{q} is not a prime power")));
    }
    let q = q as u128;
    Ok(q * (q - 1) * (q * q - 1))
}

/// `#GL_2` of a prime power field or of `Z/m` for squarefree `m`, the latter
/// as the product of the field orders of its prime factors.
pub fn gl2_order(m: u64) -> Result<u128> {
    let f = factorize(m.max(1));
    if m < 2 {
        return Err(Error::Domain(format!("gl2_order needs modulus >= 2, got {m}")));
    }
    if f.len() == 1 {
        return gl2_field_order(m);
    }
    if f.iter().any(|&(_, k)| k > 1) {
        return Err(Error::Unsupported(format!(
            "composite modulus {m} is not squarefree"
        )));
    }
    f.iter().map(|&(p, _)| gl2_field_order(p)).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(n: u64) -> Vec<u64> {
        (2..=n).filter(|&k| (2..k).all(|d| k % d != 0)).collect()
    }

    #[test]
    fn sieve_small_cases() {
        assert_eq!(prime_sieve(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(prime_sieve(2).unwrap(), vec![2]);
        assert_eq!(prime_sieve(100).unwrap().len(), 25);
        assert_eq!(prime_sieve(1000).unwrap(), trial_division_primes(1000));
        assert!(matches!(prime_sieve(1), Err(Error::Domain(_))));
    }

    #[test]
    fn sieve_ceiling_enforced() {
        assert!(matches!(
            prime_sieve(DEFAULT_SIEVE_CEILING + 1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn pi_values() {
        assert_eq!(pi_exact(10).unwrap(), 4);
        assert_eq!(pi_exact(1).unwrap(), 0);
        assert_eq!(pi_exact(2).unwrap(), 1);
        assert_eq!(pi_exact(1_000_000).unwrap(), 78498);
    }

    #[test]
    fn dusart_values() {
        let at_e = dusart_bound(&LogValue::e()).unwrap();
        assert_eq!(at_e.to_decimal(6), "6.252048");
        assert_eq!(dusart_bound(&LogValue::from_i64(2)).unwrap().to_decimal(6), "8.296949");
        let million = dusart_bound(&LogValue::from_i64(1_000_000)).unwrap();
        assert_eq!(million.to_decimal(4), "79193.3916");
        assert!(LogValue::from_i64(78498) <= million);
        assert!(dusart_bound(&LogValue::one()).is_err());
    }

    #[test]
    fn rad_and_omega() {
        assert_eq!(rad(12), 6);
        assert_eq!(rad(1), 1);
        assert_eq!(rad(276480), 30);
        assert_eq!(omega_distinct(12), 2);
        assert_eq!(omega_distinct(1), 0);
        assert_eq!(omega_distinct(30), 3);
    }

    #[test]
    fn rad_divides_and_is_squarefree() {
        for n in 1..=100_000u64 {
            let r = rad(n);
            assert_eq!(n % r, 0, "rad({n}) = {r}");
            assert!(factorize(r).iter().all(|&(_, k)| k == 1));
        }
    }

    fn brute_force_gl2(q: u64) -> u128 {
        let mut count = 0;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        if (a * d + q * q - (b * c) % q) % q != 0 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn gl2_matches_brute_force() {
        for q in [2, 3, 5, 7] {
            assert_eq!(gl2_order(q).unwrap(), brute_force_gl2(q), "q = {q}");
        }
        assert_eq!(gl2_order(3).unwrap(), 48);
        assert_eq!(gl2_order(5).unwrap(), 480);
        assert_eq!(gl2_order(15).unwrap(), 23040);
        assert_eq!(gl2_order(15).unwrap() * 12, 276480);
        assert!(gl2_order(12).is_err());
        assert!(gl2_field_order(6).is_err());
    }
}
