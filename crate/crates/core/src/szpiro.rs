//! The three Szpiro-type inequalities and the tautological one, evaluated on
//! a descriptor, together with the constants `eps_l`, `B_{l,d0}`, `A_0`, `B_0`.
//!
//! Verdicts here are reports. The inequalities rest on hypotheses this crate
//! does not verify, so only the identities and bounding steps are asserted
//! in tests.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::primes::{dusart_bound, is_prime, pi_exact, sieve_ceiling};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::{LogValue, Verdict};
use crate::error::{Error, Result};
use crate::expectation::{
    self, a_l_v, a_l_v_derived, arch_contribution, fiber_statistics, half, iterated_expectation_bruteforce,
    ln_rational, prime_terms, theta_ord, TermBreakdown,
};
use crate::global_model::{
    mean_j_squared, normalized_degree, q_pilot, ramified_primes, Quantity, ThetaDataDescriptor,
};
use crate::local_field::is_small;
use crate::tensor_packet::{hull_radius_local, TensorFactorList};

pub const D1: u64 = 276_480;
pub const PUBLISHED_A0: u64 = 84_372_107_405;
pub const PUBLISHED_B0: u64 = 316_495;
/// `#SL_2(F_19)`, the lower bound on `D` and `d` used for the 5/4 step.
pub const BABY_THRESHOLD: u64 = 6840;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Probabilistic,
    Baby,
    Explicit,
    Tautological,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 4] = [
        InequalityKind::Probabilistic,
        InequalityKind::Baby,
        InequalityKind::Explicit,
        InequalityKind::Tautological,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsKind {
    Probabilistic,
    Explicit,
}

fn check_l(l: u64) -> Result<()> {
    if l <= 3 || !is_prime(l) {
        return Err(Error::Domain(format!(
            "eps_l needs a prime l > 3 (l^2 + l - 12 vanishes at l = 3), got {l}"
        )));
    }
    Ok(())
}

/// `24(l+3)/(l^2+l-12)` or `96(l+3)/(l^2+l-12)`.
pub fn eps_l(l: u64, kind: EpsKind) -> Result<ExactRational> {
    check_l(l)?;
    let l = l as i64;
    let k = match kind {
        EpsKind::Probabilistic => 24,
        EpsKind::Explicit => 96,
    };
    Ok(rational::ratio(k * (l + 3), l * l + l - 12))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub l: u64,
    /// `(2/(l-1)) sum j^2 = l(l+1)/12`.
    pub mean_j_squared: bool,
    /// `(2/(l-1)) sum (j+1) = (l+5)/4`.
    pub mean_j_plus_one: bool,
    /// `(l(l+1)/12 - 1)(1/2l)(4/(l+5)) = 1/(6 + eps)`.
    pub eps_probabilistic: bool,
    /// `(l^2+l-12)/(24l(l+5)) = 1/(24 + eps)`.
    pub eps_explicit: bool,
}

impl IdentityCheck {
    pub fn all(&self) -> bool {
        self.mean_j_squared && self.mean_j_plus_one && self.eps_probabilistic && self.eps_explicit
    }
}

pub fn identity_check(l: u64) -> Result<IdentityCheck> {
    check_l(l)?;
    let li = l as i64;
    let one = ExactRational::one();
    let jp1 = expectation::mean_over_j(l, |j| rational::int(j as i64 + 1));
    let lhs_prob = (rational::ratio(li * (li + 1), 12) - &one) * rational::ratio(1, 2 * li) * rational::ratio(4, li + 5);
    let lhs_expl = rational::ratio(li * li + li - 12, 24 * li * (li + 5));
    Ok(IdentityCheck {
        l,
        mean_j_squared: mean_j_squared(l) == rational::ratio(li * (li + 1), 12),
        mean_j_plus_one: jp1 == rational::ratio(li + 5, 4),
        eps_probabilistic: lhs_prob == &one / (rational::int(6) + eps_l(l, EpsKind::Probabilistic)?),
        eps_explicit: lhs_expl == &one / (rational::int(24) + eps_l(l, EpsKind::Explicit)?),
    })
}

/// `B_{l,d0} = 276480 l^4 d0`.
pub fn ramification_ceiling(l: u64, d0: u64) -> u128 {
    D1 as u128 * (l as u128).pow(4) * d0 as u128
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantSet {
    #[serde(with = "rational::serde_str")]
    pub eps_prob: ExactRational,
    #[serde(with = "rational::serde_str")]
    pub eps_explicit: ExactRational,
    pub b: u128,
    pub a0: u64,
    pub b0: u64,
    pub d1: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantDerivation {
    pub l: u64,
    pub d0: u64,
    pub constants: ConstantSet,
    /// `[23040, 12, d0, l^4]`, whose product is `B`.
    pub tower: [u128; 4],
    /// `d1^2 (1 + 1.3/ln d1)`.
    pub a0_raw: LogValue,
    pub a0_candidate: u64,
    pub a0_relative_deviation: LogValue,
    /// `ln(pi) d1`.
    pub b0_raw: LogValue,
    pub b0_candidate: u64,
    pub b0_matches: bool,
}

fn ceil_u64(x: &LogValue) -> u64 {
    let c = -rational::floor(&-x.to_rational());
    c.to_u64().expect("constant fits in u64")
}

pub fn derive_constants(l: u64, d0: u64) -> Result<ConstantDerivation> {
    check_l(l)?;
    if d0 == 0 {
        return Err(Error::Domain("d0 must be positive".into()));
    }
    let d1 = LogValue::from_i64(D1 as i64);
    let a0_raw = &d1 * &d1 * (LogValue::one() + LogValue::from_rational(&rational::ratio(13, 10)) / d1.ln());
    let b0_raw = LogValue::pi().ln() * &d1;
    let a0_candidate = ceil_u64(&a0_raw);
    let b0_candidate = ceil_u64(&b0_raw);
    let published = LogValue::from_i64(PUBLISHED_A0 as i64);
    let a0_relative_deviation = (LogValue::from_i64(a0_candidate as i64) - &published).abs() / published;
    let b = ramification_ceiling(l, d0);
    Ok(ConstantDerivation {
        l,
        d0,
        constants: ConstantSet {
            eps_prob: eps_l(l, EpsKind::Probabilistic)?,
            eps_explicit: eps_l(l, EpsKind::Explicit)?,
            b,
            a0: PUBLISHED_A0,
            b0: PUBLISHED_B0,
            d1: D1,
        },
        tower: [23040, 12, d0 as u128, (l as u128).pow(4)],
        a0_raw,
        a0_candidate,
        a0_relative_deviation,
        b0_raw,
        b0_candidate,
        b0_matches: b0_candidate == PUBLISHED_B0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub kind: InequalityKind,
    pub lhs: Quantity,
    pub rhs: Quantity,
    pub verdict: Verdict,
    pub components: Components,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Components {
    Probabilistic(ProbabilisticComponents),
    Baby(BabyComponents),
    Explicit(Box<ExplicitComponents>),
    Tautological(TautologicalComponents),
}

fn report(kind: InequalityKind, lhs: Quantity, rhs: Quantity, components: Components, notes: Vec<String>) -> InequalityReport {
    InequalityReport {
        kind,
        verdict: LogValue::compare_le(&lhs.value, &rhs.value),
        lhs,
        rhs,
        components,
        notes,
    }
}

fn sum_quantities<'a>(parts: impl IntoIterator<Item = &'a Quantity>) -> Quantity {
    let mut exact = Some(LogCombination::zero());
    let mut value = LogValue::zero();
    for q in parts {
        value = value + &q.value;
        exact = match (exact, &q.exact) {
            (Some(mut a), Some(b)) => {
                a += b;
                Some(a)
            }
            _ => None,
        };
    }
    match exact {
        Some(c) => Quantity::from_exact(c),
        None => Quantity::approximate(value),
    }
}

fn scale(q: &Quantity, s: &ExactRational) -> Quantity {
    match &q.exact {
        Some(c) => Quantity::from_exact(c.scaled(s)),
        None => Quantity::approximate(&q.value * LogValue::from_rational(s)),
    }
}

/// `ln Diffbar = sum_p ln E(p^diff)`.
pub fn ln_diffbar(desc: &ThetaDataDescriptor) -> LogValue {
    desc.fibers()
        .into_iter()
        .map(|f| fiber_statistics(f, desc.d0()))
        .filter(|s| !(s.diffbar.is_zero() && s.diffbar.is_exact()))
        .map(|s| &s.diffbar * LogValue::ln_int(s.p))
        .sum()
}

/// `sum_p ln ebar_p`.
pub fn sum_ln_ebar(desc: &ThetaDataDescriptor) -> Quantity {
    let parts: Vec<Quantity> = desc
        .fibers()
        .into_iter()
        .map(|f| ln_rational(&fiber_statistics(f, desc.d0()).ebar))
        .collect();
    sum_quantities(&parts)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilisticComponents {
    #[serde(with = "rational::serde_str")]
    pub eps: ExactRational,
    pub ln_diffbar: LogValue,
    pub sum_ln_ebar: Quantity,
    pub a_l_v: Quantity,
    /// `A_{l,V}` with `4/(l+5)` in place of `5/(l+4)`.
    pub a_l_v_derived: Quantity,
    pub terms: TermBreakdown,
}

/// `(1/(6+eps)) ln|Delta_min| / [F:Q]`.
fn probabilistic_lhs(desc: &ThetaDataDescriptor) -> Result<(ExactRational, Quantity)> {
    let eps = eps_l(desc.l(), EpsKind::Probabilistic)?;
    let s = ExactRational::one() / (rational::int(6) + &eps) / rational::int(desc.deg_f() as i64);
    Ok((eps, scale(&desc.ln_delta_min, &s)))
}

pub fn probabilistic_rhs(desc: &ThetaDataDescriptor, budget: u128) -> Result<InequalityReport> {
    let (eps, lhs) = probabilistic_lhs(desc)?;
    let diff = ln_diffbar(desc);
    let ebar = sum_ln_ebar(desc);
    let a = Quantity::from_exact(a_l_v(desc));
    let rhs = sum_quantities([&Quantity::approximate(diff.clone()), &ebar, &a]);
    let rhs = if diff.is_zero() && diff.is_exact() {
        sum_quantities([&ebar, &a])
    } else {
        rhs
    };
    let mut notes = Vec::new();
    for t in expectation::term_breakdown(desc, 0)?.primes {
        if t.term_iv.direction == Verdict::Fails {
            notes.push(format!(
                "p = {}: the exact term IV exceeds the stated bound (ln b_p < 0 reverses the step)",
                t.p
            ));
        }
    }
    let components = ProbabilisticComponents {
        eps,
        ln_diffbar: diff,
        sum_ln_ebar: ebar,
        a_l_v: a,
        a_l_v_derived: Quantity::from_exact(a_l_v_derived(desc)),
        terms: expectation::term_breakdown(desc, budget)?,
    };
    Ok(report(InequalityKind::Probabilistic, lhs, rhs, Components::Probabilistic(components), notes))
}

/// Primes dividing `Disc(K/Q)`: the support of an exact `ln_disc_K`, or the
/// ramified fibers when it is not exact.
pub fn disc_k_support(desc: &ThetaDataDescriptor) -> Vec<u64> {
    if let Some(Some(c)) = desc.ln_disc_k.as_ref().map(|q| q.exact.as_ref()) {
        let mut ps: Vec<u64> = c
            .terms()
            .filter_map(|(a, k)| match a {
                Atom::LnPrime(p) if k.is_positive() => Some(*p),
                _ => None,
            })
            .collect();
        ps.sort_unstable();
        return ps;
    }
    ramified_primes(desc)
}

/// `2/ln(x) + 1 <= 5/4`.
pub fn five_quarters_threshold(x: u64) -> Verdict {
    let lhs = LogValue::from_i64(2) / LogValue::ln_int(x) + LogValue::one();
    LogValue::compare_le(&lhs, &LogValue::from_rational(&rational::ratio(5, 4)))
}

/// `(ln D + 2)(ln d + 2) <= (25/16) ln D ln d`.
pub fn five_quarters_step(ln_big_d: &LogValue, ln_d: &LogValue) -> Verdict {
    let two = LogValue::from_i64(2);
    let lhs = (ln_big_d + &two) * (ln_d + &two);
    let rhs = LogValue::from_rational(&rational::ratio(25, 16)) * ln_big_d * ln_d;
    LogValue::compare_le(&lhs, &rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStep {
    pub lhs: LogValue,
    pub rhs: LogValue,
    pub verdict: Verdict,
}

impl ChainStep {
    fn new(lhs: LogValue, rhs: LogValue) -> Self {
        ChainStep { verdict: LogValue::compare_le(&lhs, &rhs), lhs, rhs }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BabyComponents {
    #[serde(with = "rational::serde_str")]
    pub eps: ExactRational,
    pub deg_k: u64,
    pub ln_disc_k: Quantity,
    pub disc_k_support: Vec<u64>,
    /// `ln Diffbar <= ln(rad|Disc K| [K:Q])`.
    pub diff_bound: ChainStep,
    /// `sum ln ebar_p <= ln[K:Q] omega(|Disc K|)`.
    pub ebar_bound: ChainStep,
    /// `sum_p (1 - P^{(l+1)/4})(ln b_p + 4/(l+1)) <= ln|Disc K|`.
    pub a_bound: ChainStep,
    /// `(ln D + 2)(ln d + 2) <= ln(D^{5/4}) ln(d^{5/4})` on this descriptor.
    pub five_quarters: Verdict,
    pub threshold: Verdict,
}

pub fn baby_rhs(desc: &ThetaDataDescriptor) -> Result<InequalityReport> {
    let (deg_k, ln_disc_k) = match (desc.deg_k, &desc.ln_disc_k) {
        (Some(d), Some(q)) => (d, q.clone()),
        _ => {
            return Err(Error::validation(
                "deg_K",
                "the Baby Szpiro bound needs deg_K and disc_K (or ln_disc_K)",
            ))
        }
    };
    let l = desc.l();
    let (eps, lhs) = probabilistic_lhs(desc)?;
    let ln_deg = LogCombination::ln_int(deg_k);
    // A product of two logarithms has no exact form unless one factor vanishes.
    let rhs = match deg_k {
        1 => Quantity::from_exact(LogCombination::ln_pi()),
        _ => Quantity::approximate(
            LogValue::from_rational(&rational::ratio(25, 16)) * ln_deg.evaluate() * &ln_disc_k.value
                + LogValue::pi().ln(),
        ),
    };

    let support = disc_k_support(desc);
    let ln_rad: LogValue = support.iter().map(|&p| LogValue::ln_int(p)).sum();
    let diff_bound = ChainStep::new(ln_diffbar(desc), ln_rad + ln_deg.evaluate());
    let ebar_bound = ChainStep::new(
        sum_ln_ebar(desc).value,
        ln_deg.evaluate() * LogValue::from_i64(support.len() as i64),
    );
    let exponent = rational::ratio(l as i64 + 1, 4);
    let c = LogValue::from_rational(&rational::ratio(4, l as i64 + 1));
    let mut a_sum = LogValue::zero();
    for f in desc.fibers() {
        let s = fiber_statistics(f, desc.d0());
        let w = LogValue::one() - LogValue::pow_rational(&s.p_unr, &exponent);
        a_sum = a_sum + w * (LogCombination::ln_b(f.p).evaluate() + &c);
    }
    let a_bound = ChainStep::new(a_sum, ln_disc_k.value.clone());
    let five_quarters = five_quarters_step(&ln_disc_k.value, &ln_deg.evaluate());

    let mut notes = Vec::new();
    let big_enough = LogValue::compare_le(&LogValue::ln_int(BABY_THRESHOLD), &ln_disc_k.value) != Verdict::Fails
        && deg_k >= BABY_THRESHOLD;
    if !big_enough {
        notes.push(format!(
            "hypothesis of the 5/4 step unmet: needs |Disc K| and [K:Q] >= {BABY_THRESHOLD}"
        ));
    }
    let components = BabyComponents {
        eps,
        deg_k,
        ln_disc_k,
        disc_k_support: support,
        diff_bound,
        ebar_bound,
        a_bound,
        five_quarters,
        threshold: five_quarters_threshold(BABY_THRESHOLD),
    };
    Ok(report(InequalityKind::Baby, lhs, rhs, Components::Baby(components), notes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeCountMethod {
    Sieve,
    Dusart,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallEstimate {
    pub b: u128,
    pub pi_b: LogValue,
    pub method: PrimeCountMethod,
    /// `(l+3) ln(B) pi(B)`.
    pub value: LogValue,
}

/// `(l+3) ln(B) pi(B)`, with an exact prime count when `B` is within the
/// sieve ceiling and Dusart's bound otherwise.
pub fn small_estimate(l: u64, d0: u64) -> Result<SmallEstimate> {
    check_l(l)?;
    let b = ramification_ceiling(l, d0);
    let bv = LogValue::from_bigint(&BigInt::from(b));
    let (pi_b, method) = if b <= sieve_ceiling() as u128 {
        (LogValue::from_i64(pi_exact(b as u64)? as i64), PrimeCountMethod::Sieve)
    } else {
        (dusart_bound(&bv)?, PrimeCountMethod::Dusart)
    };
    let value = LogValue::from_i64(l as i64 + 3) * bv.ln() * &pi_b;
    Ok(SmallEstimate { b, pi_b, method, value })
}

#[derive(Debug, Clone, Serialize)]
pub struct LargeEstimate {
    pub primes: Vec<u64>,
    /// `((l+5)/4) sum_{p > B, p | Disc K} ln p`.
    pub value: Quantity,
    /// `2 (ln|Disc F| + ln|Cond|) / [F:Q]`.
    pub lemma_bound: Quantity,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiggerThanOne {
    pub p: u64,
    /// `2 sum_{v | p} f0 (e0 - 1 + c_v) / d0`, with `c_v = 1` at bad places.
    #[serde(with = "rational::serde_str")]
    pub lhs: ExactRational,
    pub verdict: Verdict,
}

/// The per-prime inequality behind the large-place lemma, evaluated on the
/// places of `F_0` above each ramified prime.
pub fn bigger_than_one(desc: &ThetaDataDescriptor) -> Vec<BiggerThanOne> {
    let support = disc_k_support(desc);
    desc.fibers()
        .into_iter()
        .filter(|f| support.contains(&f.p))
        .map(|f| {
            let s: ExactRational = f
                .places
                .iter()
                .map(|v| rational::ratio((2 * v.f0 * (v.e0 - 1 + v.is_bad() as u64)) as i64, desc.d0() as i64))
                .sum();
            BiggerThanOne {
                p: f.p,
                verdict: if s >= ExactRational::one() { Verdict::Holds } else { Verdict::Fails },
                lhs: s,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExplicitComponents {
    pub constants: ConstantSet,
    /// `A_0 d0^2 l^4 + B_0 d0`.
    pub exponent_constant: u128,
    pub infinite: Quantity,
    pub large: LargeEstimate,
    pub small: SmallEstimate,
    pub bigger_than_one: Vec<BiggerThanOne>,
    pub ramification_ceiling: RamificationCeiling,
}

pub fn explicit_rhs(desc: &ThetaDataDescriptor) -> Result<InequalityReport> {
    let l = desc.l();
    let d0 = desc.d0();
    let constants = derive_constants(l, d0)?.constants;
    let exponent_constant = PUBLISHED_A0 as u128 * (d0 as u128).pow(2) * (l as u128).pow(4) + PUBLISHED_B0 as u128 * d0 as u128;
    let log_part = sum_quantities([&desc.ln_cond, &desc.ln_disc_f]);
    let factor = rational::int(24) + &constants.eps_explicit;
    let scaled = scale(&log_part, &factor);
    let constant = Quantity::from_exact(LogCombination::constant(ExactRational::from_integer(BigInt::from(
        exponent_constant,
    ))));
    let rhs = sum_quantities([&constant, &scaled]);

    let b = constants.b;
    let big: Vec<u64> = disc_k_support(desc).into_iter().filter(|&p| p as u128 > b).collect();
    let weight = rational::ratio(l as i64 + 5, 4);
    let large_value: LogCombination = big.iter().map(|&p| LogCombination::ln_prime(p).scaled(&weight)).sum();
    let lemma_bound = scale(&log_part, &rational::ratio(2, desc.deg_f() as i64));
    let raw: LogCombination = big.iter().map(|&p| LogCombination::ln_prime(p)).sum();
    let large = LargeEstimate {
        verdict: LogValue::compare_le(&raw.evaluate(), &lemma_bound.value),
        primes: big,
        value: Quantity::from_exact(large_value),
        lemma_bound,
    };
    let components = ExplicitComponents {
        constants,
        exponent_constant,
        infinite: Quantity::from_exact(arch_contribution(l)?),
        large,
        small: small_estimate(l, d0)?,
        bigger_than_one: bigger_than_one(desc),
        ramification_ceiling: ramification_ceiling_check(desc),
    };
    Ok(report(
        InequalityKind::Explicit,
        desc.ln_delta_min.clone(),
        rhs,
        Components::Explicit(Box::new(components)),
        Vec::new(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct RamificationCeiling {
    pub b: u128,
    pub violations: Vec<String>,
    pub verdict: Verdict,
}

/// Every `eK <= B_{l,d0}`, and every place above `p > B` is small.
pub fn ramification_ceiling_check(desc: &ThetaDataDescriptor) -> RamificationCeiling {
    let b = ramification_ceiling(desc.l(), desc.d0());
    let mut violations = Vec::new();
    for f in desc.fibers() {
        for (i, v) in f.places.iter().enumerate() {
            if v.e_k as u128 > b {
                violations.push(format!("place {i} over {}: eK = {} exceeds B = {b}", f.p, v.e_k));
            }
            if f.p as u128 > b && !is_small(&v.lift(f.p)) {
                violations.push(format!("place {i} over {}: p > B but e >= p - 1", f.p));
            }
        }
    }
    RamificationCeiling {
        b,
        verdict: if violations.is_empty() { Verdict::Holds } else { Verdict::Fails },
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberRadius {
    pub p: u64,
    /// `E_p^2(ln R)` by enumeration, when the budget allowed it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bruteforce: Option<Quantity>,
    /// `-I + II + III ln p + IV + V` from the closed forms.
    pub term_sum: Quantity,
    /// Whether `bruteforce <= term_sum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<Verdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TautologicalComponents {
    pub arch: Quantity,
    pub fibers: Vec<FiberRadius>,
}

/// `E_p^2(ln R)` with `R` the hull radius of each tuple of lifts and `a` the
/// theta-pilot order at `v_j`.
pub fn fiber_radius_bruteforce(
    fiber: &crate::global_model::Fiber,
    d0: u64,
    l: u64,
    budget: u128,
) -> Result<LogCombination> {
    iterated_expectation_bruteforce(fiber, d0, l, budget, |j, tuple| {
        let lifts = tuple.iter().map(|v| v.lift(fiber.p)).collect();
        let a = theta_ord(tuple[tuple.len() - 1], j, l);
        Ok(hull_radius_local(&TensorFactorList::new(lifts)?, &a)?.ln_radius)
    })
}

fn fiber_term_sum(fiber: &crate::global_model::Fiber, d0: u64, l: u64) -> Quantity {
    let t = prime_terms(fiber, d0, l);
    let mut exact = -&t.term_i.exact.clone().expect("term I is exact");
    exact.add_term(Atom::LnPrime(fiber.p), t.term_iii.bound.clone());
    exact += t.term_iv.exact.exact.as_ref().expect("term IV is exact");
    let rest = match &t.term_v_bound.exact {
        Some(c) => {
            exact += c;
            LogValue::zero()
        }
        None => t.term_v_bound.value.clone(),
    };
    if t.term_ii_bound.is_zero() && rest.is_zero() {
        Quantity::from_exact(exact)
    } else {
        Quantity::approximate(exact.evaluate() + &t.term_ii_bound + rest)
    }
}

pub fn tautological_rhs(desc: &ThetaDataDescriptor, budget: u128) -> Result<InequalityReport> {
    let l = desc.l();
    let d0 = desc.d0();
    let lhs = Quantity::from_exact(-&normalized_degree(&q_pilot(desc)?, d0));
    let arch = Quantity::from_exact(arch_contribution(l)?);
    let mut fibers = Vec::new();
    let mut parts = vec![arch.clone()];
    let mut notes = Vec::new();
    let mut remaining = budget;
    for f in desc.fibers() {
        let term_sum = fiber_term_sum(f, d0, l);
        let brute = match fiber_radius_bruteforce(f, d0, l, remaining) {
            Ok(c) => {
                remaining -= expectation::tuples_required(f.places.len(), l);
                Some(Quantity::from_exact(c))
            }
            Err(Error::Budget { required, .. }) => {
                notes.push(format!(
                    "p = {}: {required} tuples exceed the remaining budget; closed-form term sum used",
                    f.p
                ));
                None
            }
            Err(e) => return Err(e),
        };
        parts.push(brute.clone().unwrap_or_else(|| term_sum.clone()));
        fibers.push(FiberRadius {
            p: f.p,
            agreement: brute.as_ref().map(|b| LogValue::compare_le(&b.value, &term_sum.value)),
            bruteforce: brute,
            term_sum,
        });
    }
    let rhs = sum_quantities(&parts);
    let components = TautologicalComponents { arch, fibers };
    Ok(report(InequalityKind::Tautological, lhs, rhs, Components::Tautological(components), notes))
}

pub fn evaluate(desc: &ThetaDataDescriptor, kind: InequalityKind, budget: u128) -> Result<InequalityReport> {
    match kind {
        InequalityKind::Probabilistic => probabilistic_rhs(desc, budget),
        InequalityKind::Baby => baby_rhs(desc),
        InequalityKind::Explicit => explicit_rhs(desc),
        InequalityKind::Tautological => tautological_rhs(desc, budget),
    }
}

/// `P^{(l+1)/2}` exponent used throughout, exposed for reports.
pub fn unramified_exponent(l: u64) -> u64 {
    half(l) + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::{int, ratio};

    fn desc(json: &str) -> ThetaDataDescriptor {
        ThetaDataDescriptor::parse(json).unwrap()
    }

    fn sample() -> ThetaDataDescriptor {
        desc(r#"{
  "schema": 1, "l": 5, "d0": 1, "deg_F": 2,
  "fibers": [
    {"p": 7, "places": [{"e0": 1, "f0": 1, "eK": 2, "fK": 1, "diffK": "1/2", "bad": {"ord_q": 1}}]},
    {"p": 5, "places": [{"e0": 1, "f0": 1, "eK": 4, "fK": 1, "diffK": "3/4", "divides_diff_F": true}]}
  ],
  "invariants": {"delta_min": "49", "ln_cond": "2*ln(7)", "disc_F": "1", "deg_K": 8,
                 "ln_disc_K": "4*ln(7) + 6*ln(5)"}
}"#)
    }

    fn unramified_bad() -> ThetaDataDescriptor {
        desc(r#"{
  "schema": 1, "l": 5, "d0": 1, "deg_F": 1,
  "fibers": [{"p": 11, "places": [{"e0": 1, "f0": 1, "eK": 1, "fK": 1, "diffK": "0", "bad": {"ord_q": 2}}]}],
  "invariants": {"delta_min": "121", "cond": "11", "disc_F": "1"}
}"#)
    }

    #[test]
    fn eps_examples() {
        assert_eq!(eps_l(5, EpsKind::Probabilistic).unwrap(), ratio(32, 3));
        assert_eq!(eps_l(7, EpsKind::Probabilistic).unwrap(), ratio(60, 11));
        assert_eq!(eps_l(5, EpsKind::Explicit).unwrap(), ratio(128, 3));
        assert_eq!(int(1) / (int(6) + ratio(32, 3)), ratio(3, 50));
        assert!(matches!(eps_l(3, EpsKind::Probabilistic), Err(Error::Domain(_))));
        assert!(eps_l(2, EpsKind::Explicit).is_err());
        assert!(eps_l(9, EpsKind::Explicit).is_err());
    }

    #[test]
    fn identities_hold() {
        for l in (5..=199).filter(|&l| is_prime(l)) {
            assert!(identity_check(l).unwrap().all(), "l = {l}");
        }
    }

    #[test]
    fn constants() {
        let d = derive_constants(5, 1).unwrap();
        assert_eq!(d.b0_candidate, 316_495);
        assert!(d.b0_matches);
        assert!(d.a0_relative_deviation.to_f64() < 1e-4);
        assert_eq!(d.constants.b, 172_800_000);
        assert_eq!(d.tower.iter().product::<u128>(), d.constants.b);
        assert_eq!(derive_constants(7, 2).unwrap().constants.b, 276_480 * 2401 * 2);
        assert_eq!(23040 * 12, D1);
    }

    #[test]
    fn five_quarters() {
        assert_eq!(five_quarters_threshold(6840), Verdict::Holds);
        let x = LogValue::ln_int(6840);
        assert_eq!(five_quarters_step(&x, &x), Verdict::Holds);
        assert_eq!(five_quarters_threshold(100), Verdict::Fails);
    }

    #[test]
    fn small_estimate_behaviour() {
        let s = small_estimate(5, 1).unwrap();
        assert_eq!(s.b, 172_800_000);
        assert_eq!(s.method, PrimeCountMethod::Dusart);
        let reference = s.value.to_f64() / (5f64.powi(5));
        let mut prev_l = 0.0;
        for l in [5u64, 7, 11, 13] {
            let mut prev_d = 0.0;
            for d0 in [1u64, 2, 4] {
                let v = small_estimate(l, d0).unwrap().value.to_f64();
                assert!(v >= prev_d);
                prev_d = v;
                let ratio = v / ((l as f64).powi(5) * d0 as f64) / reference;
                assert!((0.1..=10.0).contains(&ratio), "l={l} d0={d0} ratio={ratio}");
            }
            let v1 = small_estimate(l, 1).unwrap().value.to_f64();
            assert!(v1 >= prev_l);
            prev_l = v1;
        }
    }

    #[test]
    fn probabilistic_report() {
        let d = sample();
        let r = probabilistic_rhs(&d, expectation::DEFAULT_TUPLE_BUDGET).unwrap();
        // (3/50) (2 ln 7) / 2
        assert_eq!(r.lhs.exact.clone().unwrap(), LogCombination::atom(Atom::LnPrime(7), ratio(3, 50)));
        let mut scaled = d.file.clone();
        scaled.invariants.delta_min = Some("2401".into());
        let r2 = probabilistic_rhs(&ThetaDataDescriptor::validate(scaled).unwrap(), 1000).unwrap();
        assert_eq!(r2.lhs.exact.unwrap(), r.lhs.exact.clone().unwrap().scaled(&int(2)));
        assert_eq!(r2.rhs.value.to_decimal(30), r.rhs.value.to_decimal(30));

        let r = probabilistic_rhs(&unramified_bad(), 1000).unwrap();
        assert_eq!(r.rhs.exact.unwrap(), LogCombination::ln_pi());
    }

    #[test]
    fn baby_report() {
        let r = baby_rhs(&sample()).unwrap();
        let Components::Baby(c) = &r.components else { panic!() };
        assert_eq!(c.disc_k_support, vec![5, 7]);
        assert_eq!(c.diff_bound.verdict, Verdict::Holds);
        assert_eq!(c.ebar_bound.verdict, Verdict::Holds);
        assert_eq!(r.notes.len(), 1);
        assert!(baby_rhs(&unramified_bad()).is_err());
    }

    #[test]
    fn explicit_report() {
        let r = explicit_rhs(&sample()).unwrap();
        let Components::Explicit(c) = &r.components else { panic!() };
        assert_eq!(c.exponent_constant, 84_372_107_405u128 * 625 + 316_495);
        assert!(c.large.primes.is_empty());
        assert_eq!(c.ramification_ceiling.verdict, Verdict::Holds);
        // one bad place with e0 = 1, d0 = 1: 2 * 1 * (0 + 1) = 2
        assert_eq!(c.bigger_than_one.iter().find(|b| b.p == 7).unwrap().lhs, int(2));
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn tautological_report() {
        let r = tautological_rhs(&unramified_bad(), 1000).unwrap();
        assert_eq!(r.rhs.exact.unwrap(), LogCombination::atom(Atom::LnPi, ratio(5, 2)));
        // -deg P_q = -(2/10) ln 11
        assert_eq!(r.lhs.exact.unwrap(), LogCombination::atom(Atom::LnPrime(11), ratio(-1, 5)));

        let r = tautological_rhs(&sample(), expectation::DEFAULT_TUPLE_BUDGET).unwrap();
        let Components::Tautological(c) = &r.components else { panic!() };
        assert!(c.fibers.iter().all(|f| f.bruteforce.is_some()));
        let r = tautological_rhs(&sample(), 0).unwrap();
        assert_eq!(r.notes.len(), 2);
    }

    #[test]
    fn ceiling_flags() {
        let mut f = sample().file;
        f.fibers[0].places[0].e_k = 172_800_001;
        f.fibers[0].places[0].diff_k = ratio(172_800_000, 172_800_001);
        let d = ThetaDataDescriptor::validate(f).unwrap();
        assert_eq!(ramification_ceiling_check(&d).verdict, Verdict::Fails);
    }
}
