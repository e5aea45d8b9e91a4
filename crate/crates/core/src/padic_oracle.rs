//! Truncated arithmetic in `Z/p^N[x]/(x^E - p)` for tame Kummer towers.
//!
//! The ring is the quotient of the ring of integers of `Q_p(p^{1/E})` by
//! `p^N`. Elements carry their own absolute precision `k <= N`, meaning they
//! are known modulo `p^k`. With `E | p - 1` all `E`-th roots of unity are
//! Teichmüller lifts in `Z/p^N`, so every conjugate `zeta^k p^{1/E}` of the
//! uniformizer lives in the same ring.

use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::arith::primes::{factorize, is_prime};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::LogValue;
use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 12;
pub const MIN_PRECISION: u32 = 4;

/// Coefficient moduli must stay below this so products fit in `u128`.
const MODULUS_LIMIT: u128 = 1 << 62;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedEisensteinRing {
    p: u64,
    e: u32,
    n: u32,
    /// `powers[k] = p^k` for `k <= n`.
    powers: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingElement {
    coeffs: Vec<u64>,
    prec: u32,
}

impl RingElement {
    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    /// Absolute precision: the element is known modulo `p^precision`.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

impl TruncatedEisensteinRing {
    pub fn new(p: u64, e: u32, n: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if e == 0 || (p - 1) % e as u64 != 0 {
            return Err(Error::Unsupported(format!(
                "ramification index {e} does not divide p - 1 = {}",
                p - 1
            )));
        }
        if n < MIN_PRECISION {
            return Err(Error::Domain(format!(
                "precision {n} is below the minimum {MIN_PRECISION}"
            )));
        }
        let mut powers = vec![1u64];
        for _ in 0..n {
            let next = *powers.last().unwrap() as u128 * p as u128;
            if next >= MODULUS_LIMIT {
                return Err(Error::Resource(format!("{p}^{n} exceeds the 62-bit modulus limit")));
            }
            powers.push(next as u64);
        }
        Ok(TruncatedEisensteinRing { p, e, n, powers })
    }

    /// Largest precision the modulus limit allows for `p`.
    pub fn max_precision(p: u64) -> u32 {
        let mut k = 0;
        let mut m: u128 = 1;
        while m * (p as u128) < MODULUS_LIMIT {
            m *= p as u128;
            k += 1;
        }
        k
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn precision(&self) -> u32 {
        self.n
    }

    fn modulus(&self, prec: u32) -> u64 {
        self.powers[prec as usize]
    }

    fn make(&self, mut coeffs: Vec<u64>, prec: u32) -> RingElement {
        let m = self.modulus(prec);
        for c in coeffs.iter_mut() {
            *c %= m;
        }
        RingElement { coeffs, prec }
    }

    pub fn from_coeffs(&self, coeffs: &[i64]) -> RingElement {
        assert!(coeffs.len() <= self.e as usize, "too many coefficients");
        let m = self.modulus(self.n) as i128;
        let mut v: Vec<u64> = coeffs.iter().map(|&c| (c as i128).rem_euclid(m) as u64).collect();
        v.resize(self.e as usize, 0);
        self.make(v, self.n)
    }

    pub fn constant(&self, c: i64) -> RingElement {
        self.from_coeffs(&[c])
    }

    pub fn zero(&self) -> RingElement {
        self.constant(0)
    }

    pub fn one(&self) -> RingElement {
        self.constant(1)
    }

    /// The class of `x`, a uniformizer with `x^E = p`.
    pub fn uniformizer(&self) -> RingElement {
        if self.e == 1 {
            return self.constant(self.p as i64);
        }
        let mut v = vec![0u64; self.e as usize];
        v[1] = 1;
        self.make(v, self.n)
    }

    /// `x^k` for any `k >= 0`, reducing `x^E = p`.
    pub fn uniformizer_pow(&self, k: u32) -> RingElement {
        let (q, r) = (k / self.e, k % self.e);
        if q > self.n {
            return self.zero();
        }
        let mut v = vec![0u64; self.e as usize];
        v[r as usize] = 1;
        let base = self.make(v, self.n);
        self.scale(&base, self.modulus(q.min(self.n)))
    }

    pub fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let prec = a.prec.min(b.prec);
        let m = self.modulus(prec) as u128;
        let v = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| ((x as u128 + y as u128) % m) as u64)
            .collect();
        RingElement { coeffs: v, prec }
    }

    pub fn neg(&self, a: &RingElement) -> RingElement {
        let m = self.modulus(a.prec);
        let v = a.coeffs.iter().map(|&x| if x == 0 { 0 } else { m - x }).collect();
        RingElement { coeffs: v, prec: a.prec }
    }

    pub fn sub(&self, a: &RingElement, b: &RingElement) -> RingElement {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, a: &RingElement, c: u64) -> RingElement {
        let m = self.modulus(a.prec) as u128;
        let c = c as u128 % m;
        let v = a.coeffs.iter().map(|&x| (x as u128 * c % m) as u64).collect();
        RingElement { coeffs: v, prec: a.prec }
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let prec = a.prec.min(b.prec);
        let m = self.modulus(prec) as u128;
        let e = self.e as usize;
        let p = self.p as u128;
        let mut out = vec![0u128; e];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                let mut t = x as u128 * y as u128 % m;
                let mut k = i + j;
                if k >= e {
                    k -= e;
                    t = t * p % m;
                }
                out[k] = (out[k] + t) % m;
            }
        }
        RingElement {
            coeffs: out.into_iter().map(|c| c as u64).collect(),
            prec,
        }
    }

    pub fn pow(&self, a: &RingElement, mut k: u64) -> RingElement {
        let mut base = a.clone();
        let mut acc = self.one();
        acc.prec = a.prec;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            k >>= 1;
        }
        acc
    }

    /// Lowers the precision of `a` to `prec`.
    pub fn truncate(&self, a: &RingElement, prec: u32) -> RingElement {
        self.make(a.coeffs.clone(), prec.min(a.prec))
    }

    /// `ord_p` of `a`, in units of `1/E`, or a precision-exhausted error
    /// when `a` vanishes to its working precision.
    pub fn valuation(&self, a: &RingElement) -> Result<ExactRational> {
        let mut best: Option<ExactRational> = None;
        for (i, &c) in a.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let v = rational::int(rational::ord_p_u64(c, self.p) as i64)
                + rational::ratio(i as i64, self.e as i64);
            if best.as_ref().map_or(true, |b| v < *b) {
                best = Some(v);
            }
        }
        best.ok_or_else(|| Error::Precision {
            message: format!("element vanishes modulo p^{}", a.prec),
            required: a.prec + 1,
        })
    }

    /// Divides by `p^k`; every coefficient must be divisible by `p^k`.
    pub fn div_p_pow(&self, a: &RingElement, k: u32) -> Result<RingElement> {
        if k == 0 {
            return Ok(a.clone());
        }
        if k > a.prec {
            return Err(Error::Precision {
                message: format!("cannot divide by p^{k} at precision {}", a.prec),
                required: k + 1,
            });
        }
        let d = self.modulus(k);
        if a.coeffs.iter().any(|&c| c % d != 0) {
            return Err(Error::Domain(format!("element is not divisible by p^{k}")));
        }
        Ok(self.make(a.coeffs.iter().map(|&c| c / d).collect(), a.prec - k))
    }

    fn inv_mod(&self, c: u64, prec: u32) -> Option<u64> {
        let m = self.modulus(prec) as i128;
        let g = (c as i128).extended_gcd(&m);
        (g.gcd == 1).then(|| g.x.rem_euclid(m) as u64)
    }

    /// Inverse of a unit by Newton iteration `y <- y(2 - uy)`.
    pub fn inverse(&self, u: &RingElement) -> Result<RingElement> {
        let c0 = self
            .inv_mod(u.coeffs[0], u.prec)
            .ok_or_else(|| Error::Domain("element is not a unit".into()))?;
        let mut y = self.make(vec![0; self.e as usize], u.prec);
        y.coeffs[0] = c0;
        let two = self.truncate(&self.constant(2), u.prec);
        for _ in 0..64 {
            let uy = self.mul(u, &y);
            if uy == self.truncate(&self.one(), u.prec) {
                return Ok(y);
            }
            y = self.mul(&y, &self.sub(&two, &uy));
        }
        unreachable!("Newton inversion converges quadratically")
    }

    /// Smallest generator of `(Z/p)^x`.
    pub fn generator(&self) -> u64 {
        let p = self.p;
        if p == 2 {
            return 1;
        }
        let qs: Vec<u64> = factorize(p - 1).into_iter().map(|(q, _)| q).collect();
        (2..p)
            .find(|&g| qs.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
            .expect("cyclic group has a generator")
    }

    /// Teichmüller lift `omega` with `omega^E = 1` and
    /// `omega = g^{k(p-1)/E} mod p`, found by Hensel lifting.
    pub fn teichmuller_root(&self, k: u32) -> Result<RingElement> {
        if (self.p - 1) % self.e as u64 != 0 {
            return Err(Error::Unsupported(format!("{} does not divide p - 1", self.e)));
        }
        let k = k % self.e;
        let p = self.p;
        let m = self.modulus(self.n) as u128;
        let e = self.e as u64;
        let mut w = pow_mod(self.generator(), k as u64 * ((p - 1) / e), p) as u128;
        // Newton on f(w) = w^E - 1; f'(w) = E w^{E-1} is a unit.
        for _ in 0..=self.n.ilog2() + 1 {
            let we1 = pow_mod_u128(w, e - 1, m);
            let f = (we1 * w % m + m - 1) % m;
            if f == 0 {
                break;
            }
            let df = we1 * e as u128 % m;
            let inv = self.inv_mod(df as u64, self.n).expect("E w^{E-1} is a unit");
            w = (w + m - f * inv as u128 % m) % m;
        }
        Ok(self.constant(w as i64))
    }

    /// Truncated `log(u) = sum_{n>=1} (-1)^{n+1} a^n / n` with `a = u - 1`,
    /// summing `terms` terms. The result's precision accounts both for the
    /// division by `n` and for the uncertified tail.
    pub fn log_series(&self, u: &RingElement, terms: u64) -> Result<RingElement> {
        let a = self.sub(u, &self.truncate(&self.one(), u.prec));
        if a.is_zero() {
            return Ok(self.make(vec![0; self.e as usize], u.prec));
        }
        let v = self.valuation(&a)?;
        let threshold = rational::ratio(1, self.p as i64 - 1);
        if v <= threshold {
            return Err(Error::Domain(format!(
                "log series needs ord(u - 1) > 1/(p-1), got {}",
                rational::format(&v)
            )));
        }
        let mut sum = self.make(vec![0; self.e as usize], a.prec);
        let mut power = a.clone();
        for n in 1..=terms {
            if n > 1 {
                power = self.mul(&power, &a);
            }
            let k = rational::ord_p_u64(n, self.p);
            let shifted = self.div_p_pow(&power, k)?;
            let unit = n / self.powers[k as usize];
            let inv = self
                .inv_mod(unit % self.modulus(shifted.prec.max(1)), shifted.prec.max(1))
                .unwrap_or(0);
            let mut term = self.scale(&shifted, inv);
            if n % 2 == 0 {
                term = self.neg(&term);
            }
            sum = self.add(&self.truncate(&sum, term.prec), &term);
        }
        let tail = tail_min(&v, self.p, terms);
        let tail_prec = rational::floor(&tail).to_u32().unwrap_or(u32::MAX);
        let prec = sum.prec.min(tail_prec);
        if prec == 0 || rational::int(prec as i64) <= v {
            let needed = rational::floor(&v).to_u32().unwrap_or(0) + 1;
            return Err(Error::Precision {
                message: format!(
                    "log series certified only to p^{prec}; raise precision or use at least {} terms",
                    terms_for_precision(&v, self.p, needed + 1)
                ),
                required: self.n + needed.saturating_sub(prec) + 1,
            });
        }
        Ok(self.truncate(&sum, prec))
    }

    /// [`Self::log_series`] with enough terms that the tail does not limit
    /// the result's precision.
    pub fn log_series_auto(&self, u: &RingElement) -> Result<RingElement> {
        let a = self.sub(u, &self.truncate(&self.one(), u.prec));
        if a.is_zero() {
            return self.log_series(u, 0);
        }
        let v = self.valuation(&a)?;
        self.log_series(u, terms_for_precision(&v, self.p, u.prec))
    }
}

/// `min_{n > terms} (n v - ord_p(n))`. Past `n v >= 2` the lower envelope
/// `n v - log_p n` is increasing, which bounds the search.
fn tail_min(v: &ExactRational, p: u64, terms: u64) -> ExactRational {
    let mut best: Option<ExactRational> = None;
    let mut n = terms + 1;
    loop {
        let nv = v * rational::int(n as i64);
        let val = &nv - rational::int(rational::ord_p_u64(n, p) as i64);
        if best.as_ref().map_or(true, |b| val < *b) {
            best = Some(val);
        }
        let envelope = &nv - rational::int(n.ilog(p) as i64 + 1);
        if nv >= rational::int(2) && envelope >= *best.as_ref().unwrap() {
            return best.unwrap();
        }
        n += 1;
    }
}

/// Number of terms after which every tail term lies in `p^target`.
pub fn terms_for_precision(v: &ExactRational, p: u64, target: u32) -> u64 {
    let target = rational::int(target as i64);
    let mut terms = 1;
    while tail_min(v, p, terms) < target {
        terms *= 2;
    }
    let (mut lo, mut hi) = (terms / 2, terms);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if tail_min(v, p, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Exact `min_{1 <= n <= n_max} (n v - ord_p(n))`.
///
/// The window must extend past the analytic minimizer `1/(v ln p)` of
/// `x v - log_p x`.
pub fn crude_min_term(v: &ExactRational, p: u64, n_max: u64) -> Result<ExactRational> {
    if *v <= rational::int(0) {
        return Err(Error::Domain("crude_min_term needs v > 0".into()));
    }
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    // n_max > 1/(v ln p)  <=>  n_max v ln p > 1, decided at full precision.
    let lhs = LogValue::from_rational(&(v * rational::int(n_max as i64))) * LogValue::ln_int(p);
    if lhs <= LogValue::one() {
        let minimizer = (LogValue::one() / (LogValue::from_rational(v) * LogValue::ln_int(p))).to_f64();
        return Err(Error::WidenWindow { n_max, minimizer });
    }
    Ok((1..=n_max)
        .map(|n| v * rational::int(n as i64) - rational::int(rational::ord_p_u64(n, p) as i64))
        .min()
        .expect("window is nonempty"))
}

/// Analytic lower bound `1/ln p + log_p(v ln p)` for the crude minimum.
pub fn crude_analytic_bound(v: &ExactRational, p: u64) -> LogValue {
    let ln_p = LogValue::ln_int(p);
    LogValue::one() / &ln_p + (LogValue::from_rational(v) * &ln_p).ln() / &ln_p
}

/// Runs `f` on a ring of precision `start`, raising the precision on
/// precision-exhausted errors until the modulus limit is reached.
pub fn with_auto_precision<T>(
    p: u64,
    e: u32,
    start: u32,
    mut f: impl FnMut(&TruncatedEisensteinRing) -> Result<T>,
) -> Result<T> {
    let ceiling = TruncatedEisensteinRing::max_precision(p);
    let mut n = start.max(MIN_PRECISION);
    loop {
        let ring = TruncatedEisensteinRing::new(p, e, n.min(ceiling))?;
        match f(&ring) {
            Err(Error::Precision { required, .. }) if n < ceiling => {
                n = required.max(n + 1).min(ceiling);
            }
            other => return other,
        }
    }
}

pub(crate) fn pow_mod(b: u64, e: u64, m: u64) -> u64 {
    pow_mod_u128(b as u128, e, m as u128) as u64
}

fn pow_mod_u128(mut b: u128, mut e: u64, m: u128) -> u128 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}
