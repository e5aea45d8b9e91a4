//! The iterated expectation `E_p^2` over tuples of places above `p`, the five
//! terms bounding `E_p^2(ln R)`, the archimedean contribution and `A_{l,V}`.
//!
//! Tuples `(v_0, ..., v_j)` have `j` uniform in `1..=(l-1)/2` and places
//! i.i.d. with weight `Pr(v) = e0 f0 / d0`.

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::{LogValue, Verdict};
use crate::error::{Error, Result};
use crate::global_model::{
    mean_j_squared, place_probability, validate_l, Fiber, PlaceRecord, Quantity, ThetaDataDescriptor,
};

pub const DEFAULT_TUPLE_BUDGET: u128 = 10_000_000;

/// `ln x` for a positive rational, exact when numerator and denominator fit in `u64`.
pub fn ln_rational(x: &ExactRational) -> Quantity {
    match (x.numer().to_u64(), x.denom().to_u64()) {
        (Some(n), Some(d)) => Quantity::from_exact(&LogCombination::ln_int(n) - &LogCombination::ln_int(d)),
        _ => Quantity::approximate(LogValue::ln_rational(x)),
    }
}

/// `(l - 1) / 2`, the largest tuple index `j`.
pub fn half(l: u64) -> u64 {
    (l - 1) / 2
}

/// `(2/(l-1)) sum_{j=1}^{(l-1)/2} g(j)`.
pub fn mean_over_j(l: u64, g: impl Fn(u64) -> ExactRational) -> ExactRational {
    let h = half(l);
    let s: ExactRational = (1..=h).map(g).sum();
    s / rational::int(h as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberStatistics {
    pub p: u64,
    #[serde(with = "rational::serde_str")]
    pub p_unr: ExactRational,
    #[serde(with = "rational::serde_str")]
    pub ebar: ExactRational,
    /// `E(p^diff)`.
    pub mean_p_diff: LogValue,
    /// `log_p E(p^diff)`.
    pub diffbar: LogValue,
}

pub fn fiber_statistics(fiber: &Fiber, d0: u64) -> FiberStatistics {
    let mut p_unr = ExactRational::zero();
    let mut ebar = ExactRational::zero();
    let mut mean = LogValue::zero();
    for v in &fiber.places {
        let pr = place_probability(v, d0);
        if v.e_k == 1 {
            p_unr += &pr;
        }
        ebar += &pr * rational::int(v.e_k as i64);
        let p_diff = if v.diff_k.is_zero() {
            LogValue::one()
        } else {
            LogValue::pow_rational(&rational::int(fiber.p as i64), &v.diff_k)
        };
        mean = mean + LogValue::from_rational(&pr) * p_diff;
    }
    let diffbar = if mean.is_exact() && mean == LogValue::one() {
        LogValue::zero()
    } else {
        mean.ln() / LogValue::ln_int(fiber.p)
    };
    FiberStatistics { p: fiber.p, p_unr, ebar, mean_p_diff: mean, diffbar }
}

/// Number of tuple evaluations an exhaustive `E_p^2` over `n` places needs.
pub fn tuples_required(n: usize, l: u64) -> u128 {
    let mut total: u128 = 0;
    for j in 1..=half(l) {
        let count = (n as u128).checked_pow(j as u32 + 1).unwrap_or(u128::MAX);
        total = total.saturating_add(count);
    }
    total
}

/// Exact `E_p^2(X)` by enumerating every tuple. `quantity` receives `j` and
/// the tuple `(v_0, ..., v_j)`.
pub fn iterated_expectation_bruteforce(
    fiber: &Fiber,
    d0: u64,
    l: u64,
    budget: u128,
    mut quantity: impl FnMut(u64, &[&PlaceRecord]) -> Result<LogCombination>,
) -> Result<LogCombination> {
    validate_l(l)?;
    let n = fiber.places.len();
    let required = tuples_required(n, l);
    if required > budget {
        return Err(Error::Budget { required, budget });
    }
    let probs: Vec<ExactRational> = fiber.places.iter().map(|v| place_probability(v, d0)).collect();
    let h = half(l);
    let mut total = LogCombination::zero();
    for j in 1..=h {
        let len = j as usize + 1;
        let mut idx = vec![0usize; len];
        let mut acc = LogCombination::zero();
        loop {
            let tuple: Vec<&PlaceRecord> = idx.iter().map(|&i| &fiber.places[i]).collect();
            let w: ExactRational = idx.iter().map(|&i| &probs[i]).product();
            if !w.is_zero() {
                acc.add_scaled(&quantity(j, &tuple)?, &w);
            }
            // odometer
            let mut k = 0;
            while k < len {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
        total += &acc;
    }
    Ok(total.scaled(&rational::ratio(1, h as i64)))
}

/// `ord_p(q_v^{j^2/2l})` at a bad place, `0` elsewhere.
pub fn theta_ord(v: &PlaceRecord, j: u64, l: u64) -> ExactRational {
    rational::ratio(v.ord_q() as i64, v.e0 as i64) * rational::ratio((j * j) as i64, 2 * l as i64)
}

/// Term I: `E_p^2(ord_p(q_{v_j}^{j^2/2l})) ln p`, the fiber's share of the
/// lgp-degree of the theta pilot. It enters the radius with a minus sign.
pub fn term_i(fiber: &Fiber, d0: u64, l: u64) -> LogCombination {
    let mut s = ExactRational::zero();
    for v in fiber.places.iter().filter(|v| v.is_bad()) {
        s += rational::ratio((v.f0 * v.ord_q()) as i64, d0 as i64);
    }
    let coef = s * mean_j_squared(l) / rational::int(2 * l as i64);
    LogCombination::atom(Atom::LnPrime(fiber.p), coef)
}

/// Term II bound `((l+1)/4) diffbar_p ln p = ((l+1)/4) ln E(p^diff)`.
pub fn term_ii_bound(stats: &FiberStatistics, l: u64) -> LogValue {
    LogValue::from_rational(&rational::ratio(l as i64 + 1, 4)) * &stats.diffbar * LogValue::ln_int(stats.p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermIII {
    #[serde(with = "rational::serde_str")]
    pub exact: ExactRational,
    #[serde(with = "rational::serde_str")]
    pub bound: ExactRational,
}

/// Term III: `1 - (2/(l-1)) sum_j P^{j+1}`, bounded by `1 - P^{(l+1)/2}`.
pub fn term_iii(stats: &FiberStatistics, l: u64) -> TermIII {
    let p = &stats.p_unr;
    let exact = ExactRational::one() - mean_over_j(l, |j| rational::pow(p, j as u32 + 1));
    let bound = ExactRational::one() - rational::pow(p, half(l) as u32 + 1);
    TermIII { exact, bound }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermIV {
    pub exact: Quantity,
    pub stated_bound: Quantity,
    /// Whether `exact <= stated_bound`.
    pub direction: Verdict,
}

/// Term IV: `ln(b_p) (2/(l-1)) sum_j (j+1)(1 - P^{j+1})` against the stated
/// bound `((l+5)/4) ln(b_p) (1 - P^{(l+1)/2})`. Since `ln b_p < 0` the
/// stated step can point the wrong way; the direction is reported, not assumed.
pub fn term_iv(stats: &FiberStatistics, l: u64) -> TermIV {
    let p = &stats.p_unr;
    let exact_coef = mean_over_j(l, |j| {
        rational::int(j as i64 + 1) * (ExactRational::one() - rational::pow(p, j as u32 + 1))
    });
    let bound_coef = rational::ratio(l as i64 + 5, 4) * (ExactRational::one() - rational::pow(p, half(l) as u32 + 1));
    let ln_b = LogCombination::ln_b(stats.p);
    let exact = Quantity::from_exact(ln_b.scaled(&exact_coef));
    let stated_bound = Quantity::from_exact(ln_b.scaled(&bound_coef));
    // ln b_p < 0, so exact <= bound iff exact_coef >= bound_coef.
    let direction = if exact_coef >= bound_coef { Verdict::Holds } else { Verdict::Fails };
    TermIV { exact, stated_bound, direction }
}

/// Term V bound `((l+5)/4) ln ebar_p`.
pub fn term_v_bound(stats: &FiberStatistics, l: u64) -> Quantity {
    let factor = rational::ratio(l as i64 + 5, 4);
    match ln_rational(&stats.ebar).exact {
        Some(c) => Quantity::from_exact(c.scaled(&factor)),
        None => Quantity::approximate(LogValue::from_rational(&factor) * LogValue::ln_rational(&stats.ebar)),
    }
}

/// `((l+5)/4) ln pi`.
pub fn arch_contribution(l: u64) -> Result<LogCombination> {
    validate_l(l)?;
    Ok(LogCombination::atom(Atom::LnPi, rational::ratio(l as i64 + 5, 4)))
}

/// `A_{l,V} = ln pi + sum_p (1 - P_unr^{(l+1)/2}) (ln b_p + 5/(l+4))`.
pub fn a_l_v(desc: &ThetaDataDescriptor) -> LogCombination {
    a_l_v_with(desc, &rational::ratio(5, desc.l() as i64 + 4))
}

/// `A_{l,V}` with the constant `4/(l+5)` that the division by `(l+5)/4`
/// produces.
pub fn a_l_v_derived(desc: &ThetaDataDescriptor) -> LogCombination {
    a_l_v_with(desc, &rational::ratio(4, desc.l() as i64 + 5))
}

fn a_l_v_with(desc: &ThetaDataDescriptor, constant: &ExactRational) -> LogCombination {
    let l = desc.l();
    let mut c = LogCombination::ln_pi();
    for fiber in desc.fibers() {
        let stats = fiber_statistics(fiber, desc.d0());
        let w = ExactRational::one() - rational::pow(&stats.p_unr, half(l) as u32 + 1);
        if w.is_zero() {
            continue;
        }
        let mut t = LogCombination::ln_b(fiber.p);
        t.add_term(Atom::One, constant.clone());
        c.add_scaled(&t, &w);
    }
    c
}

/// Closed forms for one prime, with brute-force values when computed.
#[derive(Debug, Clone, Serialize)]
pub struct PrimeTerms {
    pub p: u64,
    pub stats: FiberStatistics,
    pub term_i: Quantity,
    pub term_ii_bound: LogValue,
    pub term_iii: TermIII,
    pub term_iv: TermIV,
    pub term_v_bound: Quantity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactTerms>,
}

/// Brute-force `E_p^2` of each term's random variable.
#[derive(Debug, Clone, Serialize)]
pub struct ExactTerms {
    pub term_i: Quantity,
    pub term_ii: Quantity,
    pub term_iii: Quantity,
    pub term_iv: Quantity,
    pub term_v: Quantity,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermBreakdown {
    pub primes: Vec<PrimeTerms>,
    pub arch: Quantity,
}

fn diff_gap(tuple: &[&PlaceRecord]) -> ExactRational {
    let mut l1 = ExactRational::zero();
    let mut linf = ExactRational::zero();
    for v in tuple {
        l1 += &v.diff_k;
        if v.diff_k > linf {
            linf = v.diff_k.clone();
        }
    }
    l1 - linf
}

fn is_ramified(tuple: &[&PlaceRecord]) -> bool {
    tuple.iter().any(|v| v.e_k > 1)
}

/// Exhaustive `E_p^2` of the five random variables.
pub fn exact_terms(fiber: &Fiber, d0: u64, l: u64, budget: u128) -> Result<ExactTerms> {
    let p = fiber.p;
    let run = |f: &dyn Fn(u64, &[&PlaceRecord]) -> LogCombination| -> Result<Quantity> {
        iterated_expectation_bruteforce(fiber, d0, l, budget, |j, t| Ok(f(j, t))).map(Quantity::from_exact)
    };
    Ok(ExactTerms {
        term_i: run(&|j, t| LogCombination::atom(Atom::LnPrime(p), theta_ord(t[t.len() - 1], j, l)))?,
        term_ii: run(&|_, t| LogCombination::atom(Atom::LnPrime(p), diff_gap(t)))?,
        term_iii: run(&|_, t| LogCombination::constant(rational::int(is_ramified(t) as i64)))?,
        term_iv: run(&|j, t| {
            if is_ramified(t) {
                LogCombination::ln_b(p).scaled(&rational::int(j as i64 + 1))
            } else {
                LogCombination::zero()
            }
        })?,
        term_v: run(&|_, t| t.iter().map(|v| LogCombination::ln_int(v.e_k)).sum())?,
    })
}

pub fn prime_terms(fiber: &Fiber, d0: u64, l: u64) -> PrimeTerms {
    let stats = fiber_statistics(fiber, d0);
    PrimeTerms {
        p: fiber.p,
        term_i: Quantity::from_exact(term_i(fiber, d0, l)),
        term_ii_bound: term_ii_bound(&stats, l),
        term_iii: term_iii(&stats, l),
        term_iv: term_iv(&stats, l),
        term_v_bound: term_v_bound(&stats, l),
        stats,
        exact: None,
    }
}

/// Closed forms for every fiber, with brute-force values where the budget allows.
pub fn term_breakdown(desc: &ThetaDataDescriptor, budget: u128) -> Result<TermBreakdown> {
    let l = desc.l();
    let mut primes = Vec::new();
    for fiber in desc.fibers() {
        let mut t = prime_terms(fiber, desc.d0(), l);
        t.exact = match exact_terms(fiber, desc.d0(), l, budget) {
            Ok(e) => Some(e),
            Err(Error::Budget { .. }) => None,
            Err(e) => return Err(e),
        };
        primes.push(t);
    }
    Ok(TermBreakdown { primes, arch: Quantity::from_exact(arch_contribution(l)?) })
}

#[derive(Debug, Clone, Serialize)]
pub struct JensenReport {
    /// `exp(E ln X) <= E X`.
    pub left: Verdict,
    /// `E X <= ln E(exp X)`, as printed.
    pub right: Verdict,
}

/// Checks both Jensen inequalities for a weighted sample of positive values.
pub fn jensen_check(samples: &[(ExactRational, ExactRational)]) -> Result<JensenReport> {
    if samples.is_empty() {
        return Err(Error::Input("jensen_check needs at least one sample".into()));
    }
    let total: ExactRational = samples.iter().map(|(w, _)| w.clone()).sum();
    if samples.iter().any(|(w, x)| *w < ExactRational::zero() || *x <= ExactRational::zero()) || total.is_zero() {
        return Err(Error::Input("weights must be non-negative and values positive".into()));
    }
    let mean: ExactRational = samples.iter().map(|(w, x)| w * x).sum::<ExactRational>() / &total;
    let mean_v = LogValue::from_rational(&mean);
    let mut e_ln = LogValue::zero();
    let mut e_exp = LogValue::zero();
    for (w, x) in samples {
        let pw = LogValue::from_rational(&(w / &total));
        e_ln = e_ln + &pw * LogValue::ln_rational(x);
        e_exp = e_exp + pw * LogValue::from_rational(x).exp();
    }
    Ok(JensenReport {
        left: LogValue::compare_le(&e_ln.exp(), &mean_v),
        right: LogValue::compare_le(&mean_v, &e_exp.ln()),
    })
}
