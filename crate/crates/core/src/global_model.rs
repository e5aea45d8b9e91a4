//! Descriptor data model for initial theta data: places of `F_0` over each
//! prime with their chosen lifts to `K`, the probability space on places,
//! pilot divisors and their normalized Arakelov degrees, and the global
//! consistency checks relating them to the supplied invariants.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::primes::{is_prime, prime_sieve};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::{LogValue, Verdict};
use crate::error::{Error, Result};
use crate::local_field::LocalFieldData;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_INTEGER_BITS: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadData {
    pub ord_q: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ord_delta: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceRecord {
    pub e0: u64,
    pub f0: u64,
    #[serde(rename = "eK")]
    pub e_k: u64,
    #[serde(rename = "fK")]
    pub f_k: u64,
    #[serde(rename = "diffK", with = "rational::serde_str")]
    pub diff_k: ExactRational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad: Option<BadData>,
    /// Whether the place divides `Diff(F/Q)`; implied when `e0 > 1`.
    #[serde(default, rename = "divides_diff_F", skip_serializing_if = "Option::is_none")]
    pub divides_diff_f: Option<bool>,
}

impl PlaceRecord {
    pub fn is_bad(&self) -> bool {
        self.bad.is_some()
    }

    pub fn ord_q(&self) -> u64 {
        self.bad.as_ref().map_or(0, |b| b.ord_q)
    }

    pub fn lift(&self, p: u64) -> LocalFieldData {
        LocalFieldData {
            p,
            e: self.e_k,
            f: self.f_k,
            diff_exp: self.diff_k.clone(),
            wild: self.e_k % p == 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fiber {
    pub p: u64,
    pub places: Vec<PlaceRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInvariants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_delta_min: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_cond: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cond: Option<String>,
    #[serde(default, rename = "ln_disc_F", skip_serializing_if = "Option::is_none")]
    pub ln_disc_f: Option<String>,
    #[serde(default, rename = "disc_F", skip_serializing_if = "Option::is_none")]
    pub disc_f: Option<String>,
    #[serde(default, rename = "deg_K", skip_serializing_if = "Option::is_none")]
    pub deg_k: Option<u64>,
    #[serde(default, rename = "disc_K", skip_serializing_if = "Option::is_none")]
    pub disc_k: Option<String>,
    #[serde(default, rename = "ln_disc_K", skip_serializing_if = "Option::is_none")]
    pub ln_disc_k: Option<String>,
}

/// The descriptor file as written on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorFile {
    pub schema: u32,
    pub l: u64,
    pub d0: u64,
    #[serde(rename = "deg_F")]
    pub deg_f: u64,
    pub fibers: Vec<Fiber>,
    pub invariants: RawInvariants,
}

/// A logarithmic invariant: the exact log combination when one is known,
/// and its value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<LogCombination>,
    pub value: LogValue,
}

impl Quantity {
    pub fn from_exact(c: LogCombination) -> Self {
        let value = c.evaluate();
        Quantity { exact: Some(c), value }
    }

    pub fn approximate(value: LogValue) -> Self {
        Quantity { exact: None, value }
    }

    fn parse_ln(text: &str, name: &str) -> Result<Self> {
        let c = LogCombination::parse(text)
            .map_err(|e| Error::validation(name, format!("cannot read {name}: {e}")))?;
        Ok(Self::from_exact(c))
    }

    /// `ln n` for a positive integer given in decimal. Exact when `n`
    /// factors over primes below `10^5`.
    fn parse_int(text: &str, name: &str) -> Result<Self> {
        let n: BigInt = text
            .trim()
            .parse()
            .map_err(|_| Error::validation(name, format!("{name} is not an integer: {text:?}")))?;
        if !n.is_positive() {
            return Err(Error::validation(name, format!("{name} must be positive")));
        }
        if n.bits() > MAX_INTEGER_BITS {
            return Err(Error::validation(
                name,
                format!("{name} has {} bits; exact integers are limited to {MAX_INTEGER_BITS}, use the ln_ form", n.bits()),
            ));
        }
        let mut rest = n.clone();
        let mut c = LogCombination::zero();
        for p in prime_sieve(100_000)? {
            if rest.is_one() {
                break;
            }
            let bp = BigInt::from(p);
            let mut k = 0;
            loop {
                let (q, r) = rest.div_rem(&bp);
                if !r.is_zero() {
                    break;
                }
                rest = q;
                k += 1;
            }
            if k > 0 {
                c.add_term(Atom::LnPrime(p), rational::int(k));
            }
        }
        if rest.is_one() {
            Ok(Self::from_exact(c))
        } else {
            Ok(Self::approximate(LogValue::from_bigint(&n).ln()))
        }
    }

    /// `self - other`, exact when both sides are.
    pub fn residual(&self, other: &Quantity) -> Quantity {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Quantity::from_exact(a - b),
            _ => Quantity::approximate(&self.value - &other.value),
        }
    }

    /// Verdict for `self == 0`: exact zero holds; otherwise compared to the
    /// error budget.
    pub fn zero_verdict(&self) -> Verdict {
        match &self.exact {
            Some(c) if c.is_zero() => Verdict::Holds,
            Some(_) => Verdict::Fails,
            None => {
                let le = LogValue::compare_le(&self.value, &LogValue::zero());
                let ge = LogValue::compare_le(&LogValue::zero(), &self.value);
                match (le, ge) {
                    (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
                    _ => Verdict::WithinError,
                }
            }
        }
    }
}

/// A parsed and validated descriptor.
#[derive(Debug, Clone)]
pub struct ThetaDataDescriptor {
    pub file: DescriptorFile,
    pub ln_delta_min: Quantity,
    pub ln_cond: Quantity,
    pub ln_disc_f: Quantity,
    pub deg_k: Option<u64>,
    pub ln_disc_k: Option<Quantity>,
    pub warnings: Vec<String>,
}

fn one_of(ln: &Option<String>, exact: &Option<String>, ln_name: &str, name: &str) -> Result<Quantity> {
    match (ln, exact) {
        (Some(t), None) => Quantity::parse_ln(t, ln_name),
        (None, Some(t)) => Quantity::parse_int(t, name),
        (Some(_), Some(_)) => Err(Error::validation(
            name,
            format!("give exactly one of {ln_name} and {name}"),
        )),
        (None, None) => Err(Error::validation(
            name,
            format!("missing invariant: one of {ln_name} or {name} is required"),
        )),
    }
}

/// Checks the residue prime `l` of the theta data.
pub fn validate_l(l: u64) -> Result<()> {
    match l {
        2 => Err(Error::validation(
            "l_prime_gt_3",
            "l = 2 violates the initial theta data hypothesis (l must be an odd prime > 3)",
        )),
        3 => Err(Error::validation(
            "l_prime_gt_3",
            "l = 3 is a pole of eps_l: the denominator l^2 + l - 12 vanishes",
        )),
        _ if !is_prime(l) => Err(Error::validation("l_prime_gt_3", format!("l = {l} is not prime"))),
        _ => Ok(()),
    }
}

impl ThetaDataDescriptor {
    /// Parses JSON text; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let file: DescriptorFile = serde_json::from_str(text).map_err(|e| {
            if e.is_data() {
                Error::validation("schema", format!("{e}"))
            } else {
                Error::Parse(format!("{e}"))
            }
        })?;
        Self::validate(file)
    }

    pub fn validate(file: DescriptorFile) -> Result<Self> {
        if file.schema != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.schema),
            ));
        }
        validate_l(file.l)?;
        if file.d0 == 0 {
            return Err(Error::validation("d0", "d0 = [F_0:Q] must be positive"));
        }
        if file.deg_f == 0 || file.deg_f % file.d0 != 0 {
            return Err(Error::validation(
                "deg_F",
                format!("[F:Q] = {} must be a positive multiple of d0 = {}", file.deg_f, file.d0),
            ));
        }
        let mut warnings = Vec::new();
        let mut seen = BTreeSet::new();
        for fiber in &file.fibers {
            let p = fiber.p;
            if !is_prime(p) {
                return Err(Error::validation("fiber_prime", format!("fiber key {p} is not prime")));
            }
            if !seen.insert(p) {
                return Err(Error::validation("fiber_prime", format!("prime {p} has two fibers")));
            }
            if fiber.places.is_empty() {
                return Err(Error::validation("fiber_nonempty", format!("fiber over {p} has no places")));
            }
            let mut total = 0;
            for (i, v) in fiber.places.iter().enumerate() {
                let at = format!("place {i} over {p}");
                if v.e0 == 0 || v.f0 == 0 || v.e_k == 0 || v.f_k == 0 {
                    return Err(Error::validation("place_degrees", format!("{at}: e and f must be positive")));
                }
                LocalFieldData::with_diff(p, v.e_k, v.f_k, v.diff_k.clone())
                    .map_err(|e| Error::validation("different_exponent", format!("{at}: {e}")))?;
                if let Some(bad) = &v.bad {
                    if bad.ord_q == 0 {
                        return Err(Error::validation("bad_place", format!("{at}: ord_q must be positive")));
                    }
                    if let Some(d) = bad.ord_delta {
                        if d != bad.ord_q {
                            return Err(Error::validation(
                                "ogg_tate",
                                format!("{at}: ord_v(Delta_min) = {d} differs from ord_v(q) = {}", bad.ord_q),
                            ));
                        }
                    }
                    if v.e_k == 1 && p != file.l {
                        warnings.push(format!(
                            "{at}: bad multiplicative place with eK = 1 (unramified in K; the hull radius there is taken as 0)"
                        ));
                    }
                }
                if v.e_k < v.e0 || v.e_k % v.e0 != 0 {
                    warnings.push(format!("{at}: eK = {} is not a multiple of e0 = {}", v.e_k, v.e0));
                }
                total += v.e0 * v.f0;
            }
            if total != file.d0 {
                return Err(Error::validation(
                    "fiber_degree",
                    format!("fiber over {p}: sum of e0*f0 is {total}, expected d0 = {}", file.d0),
                ));
            }
        }
        if !file.fibers.iter().flat_map(|f| &f.places).any(PlaceRecord::is_bad) {
            return Err(Error::validation(
                "bad_places",
                "initial theta data requires a non-empty set of bad multiplicative places",
            ));
        }
        let inv = &file.invariants;
        let ln_delta_min = one_of(&inv.ln_delta_min, &inv.delta_min, "ln_delta_min", "delta_min")?;
        let ln_cond = one_of(&inv.ln_cond, &inv.cond, "ln_cond", "cond")?;
        let ln_disc_f = one_of(&inv.ln_disc_f, &inv.disc_f, "ln_disc_F", "disc_F")?;
        let ln_disc_k = match (&inv.ln_disc_k, &inv.disc_k) {
            (None, None) => None,
            _ => Some(one_of(&inv.ln_disc_k, &inv.disc_k, "ln_disc_K", "disc_K")?),
        };
        if inv.deg_k == Some(0) {
            return Err(Error::validation("deg_K", "[K:Q] must be positive"));
        }
        if let Some(dk) = inv.deg_k {
            if dk % file.deg_f != 0 {
                warnings.push(format!("[K:Q] = {dk} is not a multiple of [F:Q] = {}", file.deg_f));
            }
        }
        for (name, q) in [("ln_delta_min", &ln_delta_min), ("ln_cond", &ln_cond), ("ln_disc_F", &ln_disc_f)] {
            if q.value.is_negative() {
                return Err(Error::validation(name, format!("{name} must be non-negative")));
            }
        }
        Ok(ThetaDataDescriptor {
            deg_k: inv.deg_k,
            file,
            ln_delta_min,
            ln_cond,
            ln_disc_f,
            ln_disc_k,
            warnings,
        })
    }

    /// Canonical JSON: fixed key order, two-space indentation, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.file).expect("descriptor serializes");
        s.push('\n');
        s
    }

    pub fn l(&self) -> u64 {
        self.file.l
    }

    pub fn d0(&self) -> u64 {
        self.file.d0
    }

    pub fn deg_f(&self) -> u64 {
        self.file.deg_f
    }

    /// Fibers in increasing order of the prime.
    pub fn fibers(&self) -> Vec<&Fiber> {
        let mut v: Vec<&Fiber> = self.file.fibers.iter().collect();
        v.sort_by_key(|f| f.p);
        v
    }
}

/// `Pr(v) = e0 f0 / d0`.
pub fn place_probability(v: &PlaceRecord, d0: u64) -> ExactRational {
    rational::ratio((v.e0 * v.f0) as i64, d0 as i64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PilotEntry {
    pub p: u64,
    pub place: usize,
    pub f0: u64,
    #[serde(with = "rational::serde_str")]
    pub coefficient: ExactRational,
}

/// An arithmetic divisor supported on places of `F_0`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PilotDivisor {
    pub entries: Vec<PilotEntry>,
}

/// `(1/d0) sum_v c_v f0(v) ln p_v`.
pub fn normalized_degree(d: &PilotDivisor, d0: u64) -> LogCombination {
    let mut c = LogCombination::zero();
    for e in &d.entries {
        c.add_term(
            Atom::LnPrime(e.p),
            &e.coefficient * rational::ratio(e.f0 as i64, d0 as i64),
        );
    }
    c
}

fn pilot_with(desc: &ThetaDataDescriptor, scale: &ExactRational) -> Result<PilotDivisor> {
    let mut entries = Vec::new();
    for fiber in desc.fibers() {
        for (i, v) in fiber.places.iter().enumerate() {
            if let Some(bad) = &v.bad {
                entries.push(PilotEntry {
                    p: fiber.p,
                    place: i,
                    f0: v.f0,
                    coefficient: rational::int(bad.ord_q as i64) * scale,
                });
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::validation(
            "bad_places",
            "pilot divisors need a non-empty set of bad multiplicative places",
        ));
    }
    Ok(PilotDivisor { entries })
}

/// `P_q`, with coefficient `ord_v(q^{1/2l})` at each bad place.
pub fn q_pilot(desc: &ThetaDataDescriptor) -> Result<PilotDivisor> {
    pilot_with(desc, &rational::ratio(1, 2 * desc.l() as i64))
}

/// `P_{Theta,j}` for `j = 1..(l-1)/2`, coefficients `ord_v(q^{j^2/2l})`.
pub fn theta_pilot(desc: &ThetaDataDescriptor) -> Result<Vec<PilotDivisor>> {
    let l = desc.l() as i64;
    (1..=(l - 1) / 2)
        .map(|j| pilot_with(desc, &rational::ratio(j * j, 2 * l)))
        .collect()
}

/// `(2/(l-1)) sum_{j=1}^{(l-1)/2} j^2`.
pub fn mean_j_squared(l: u64) -> ExactRational {
    let h = (l as i64 - 1) / 2;
    let s: i64 = (1..=h).map(|j| j * j).sum();
    rational::ratio(2 * s, l as i64 - 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct PilotRelation {
    pub q_degree: LogCombination,
    pub theta_lgp_degree: LogCombination,
    #[serde(with = "rational::serde_str")]
    pub factor: ExactRational,
    pub j_square_identity: bool,
    pub verdict: Verdict,
}

/// Checks `deg_lgp(P_Theta) = (l(l+1)/12) deg(P_q)` exactly, with
/// `deg_lgp(P_Theta)` the average of `deg(P_{Theta,j})` over `j`.
pub fn pilot_degree_relation_check(desc: &ThetaDataDescriptor) -> Result<PilotRelation> {
    let l = desc.l();
    let d0 = desc.d0();
    let q_degree = normalized_degree(&q_pilot(desc)?, d0);
    let thetas = theta_pilot(desc)?;
    let mut lgp = LogCombination::zero();
    for t in &thetas {
        lgp += &normalized_degree(t, d0);
    }
    let lgp = lgp.scaled(&rational::ratio(1, thetas.len() as i64));
    let factor = rational::ratio((l * (l + 1)) as i64, 12);
    let j_square_identity = mean_j_squared(l) == factor;
    let holds = j_square_identity && lgp == q_degree.scaled(&factor);
    Ok(PilotRelation {
        q_degree,
        theta_lgp_degree: lgp,
        factor,
        j_square_identity,
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualCheck {
    pub lhs: LogValue,
    pub rhs: LogValue,
    pub residual: LogValue,
    pub exact: bool,
    pub verdict: Verdict,
}

impl ResidualCheck {
    fn new(lhs: Quantity, rhs: Quantity) -> Self {
        let r = lhs.residual(&rhs);
        ResidualCheck {
            exact: r.exact.is_some(),
            verdict: r.zero_verdict(),
            lhs: lhs.value,
            rhs: rhs.value,
            residual: r.value,
        }
    }
}

/// `deg(P_q)` against `(1/2l) ln|Delta_min| / [F:Q]`.
pub fn qpilot_discriminant_check(desc: &ThetaDataDescriptor) -> Result<ResidualCheck> {
    let lhs = Quantity::from_exact(normalized_degree(&q_pilot(desc)?, desc.d0()));
    let scale = rational::ratio(1, (2 * desc.l() * desc.deg_f()) as i64);
    let rhs = match &desc.ln_delta_min.exact {
        Some(c) => Quantity::from_exact(c.scaled(&scale)),
        None => Quantity::approximate(&desc.ln_delta_min.value * LogValue::from_rational(&scale)),
    };
    Ok(ResidualCheck::new(lhs, rhs))
}

/// Base change of the minimal discriminant at one place `v | p` with
/// `ord_v(q)` and residue degree `f_v`: `[K:F] ord_v(q) f_v ln p` against
/// `sum_w ord_w(q) f_w ln p` with `ord_w(q) = e(w/v) ord_v(q)`, `f_w = f(w/v) f_v`.
pub fn base_change_check(lifts: &[(u64, u64)], degree: u64, ord_v_q: u64, f_v: u64, p: u64) -> Result<Verdict> {
    let total: u64 = lifts.iter().map(|(e, f)| e * f).sum();
    if total != degree {
        return Err(Error::Input(format!(
            "lifts have sum e*f = {total}, expected [K:F] = {degree}"
        )));
    }
    let lhs = LogCombination::atom(Atom::LnPrime(p), rational::int((degree * ord_v_q * f_v) as i64));
    let mut rhs = LogCombination::zero();
    for &(e, f) in lifts {
        rhs.add_term(Atom::LnPrime(p), rational::int((e * ord_v_q * f * f_v) as i64));
    }
    Ok(if lhs == rhs { Verdict::Holds } else { Verdict::Fails })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NosCheck {
    pub consistent: bool,
    pub reason: String,
}

/// `e(w/p) > 1  <=>  w | l or w | Cond or w | Diff(F/Q)`, evaluated on the
/// supplied flags. Above `l` the cyclotomic bound `e(w/l) >= l - 1` must
/// also hold.
pub fn nos_ramified_predicate(e_k: u64, p: u64, l: u64, divides_cond: bool, divides_diff_f: bool) -> NosCheck {
    let ramified = e_k > 1;
    let predicted = p == l || divides_cond || divides_diff_f;
    if p == l && e_k + 1 < l {
        return NosCheck {
            consistent: false,
            reason: format!("w | l forces e(w/l) >= l - 1 = {}, got {e_k}", l - 1),
        };
    }
    if ramified == predicted {
        return NosCheck { consistent: true, reason: String::new() };
    }
    let reason = if ramified {
        format!("e(w/p) = {e_k} > 1 but w divides none of l, Cond, Diff(F/Q)")
    } else {
        "w divides l, Cond or Diff(F/Q) but is unramified in K".to_string()
    };
    NosCheck { consistent: false, reason }
}

/// Runs [`nos_ramified_predicate`] over every place of the descriptor.
pub fn nos_findings(desc: &ThetaDataDescriptor) -> Vec<String> {
    let mut out = Vec::new();
    for fiber in desc.fibers() {
        for (i, v) in fiber.places.iter().enumerate() {
            let diff_f = v.e0 > 1 || v.divides_diff_f.unwrap_or(false);
            let c = nos_ramified_predicate(v.e_k, fiber.p, desc.l(), v.is_bad(), diff_f);
            if !c.consistent {
                out.push(format!("place {i} over {}: {}", fiber.p, c.reason));
            }
        }
    }
    out
}

/// `sum_p E(diff) ln p`, the averaged different exponent, exactly.
pub fn mean_diff_log(desc: &ThetaDataDescriptor) -> LogCombination {
    let mut c = LogCombination::zero();
    for fiber in desc.fibers() {
        for v in &fiber.places {
            c.add_term(Atom::LnPrime(fiber.p), place_probability(v, desc.d0()) * &v.diff_k);
        }
    }
    c
}

/// `ln|Disc(K/Q)| / [K:Q]` against the averaged different; `None` when the
/// descriptor does not carry `K`'s invariants.
pub fn diff_disc_bridge(desc: &ThetaDataDescriptor) -> Option<ResidualCheck> {
    let deg = desc.deg_k?;
    let disc = desc.ln_disc_k.as_ref()?;
    let scale = rational::ratio(1, deg as i64);
    let lhs = match &disc.exact {
        Some(c) => Quantity::from_exact(c.scaled(&scale)),
        None => Quantity::approximate(&disc.value * LogValue::from_rational(&scale)),
    };
    Some(ResidualCheck::new(lhs, Quantity::from_exact(mean_diff_log(desc))))
}

/// Primes at which some lift is ramified.
pub fn ramified_primes(desc: &ThetaDataDescriptor) -> Vec<u64> {
    desc.fibers()
        .into_iter()
        .filter(|f| f.places.iter().any(|v| v.e_k > 1))
        .map(|f| f.p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::{int, ratio};

    pub(crate) fn sample_json() -> String {
        r#"{
  "schema": 1,
  "l": 5,
  "d0": 1,
  "deg_F": 2,
  "fibers": [
    {"p": 7, "places": [{"e0": 1, "f0": 1, "eK": 2, "fK": 1, "diffK": "1/2", "bad": {"ord_q": 1, "ord_delta": 1}}]},
    {"p": 5, "places": [{"e0": 1, "f0": 1, "eK": 4, "fK": 1, "diffK": "3/4"}]}
  ],
  "invariants": {"delta_min": "49", "ln_cond": "2*ln(7)", "disc_F": "1", "deg_K": 8, "ln_disc_K": "4*ln(7) + 6*ln(5)"}
}"#
        .to_string()
    }

    fn with(f: impl FnOnce(&mut DescriptorFile)) -> Result<ThetaDataDescriptor> {
        let mut file: DescriptorFile = serde_json::from_str(&sample_json()).unwrap();
        f(&mut file);
        ThetaDataDescriptor::validate(file)
    }

    fn invariant_of(r: Result<ThetaDataDescriptor>) -> String {
        match r {
            Err(Error::Validation { invariant, .. }) => invariant,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn parses_and_round_trips() {
        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        let again = ThetaDataDescriptor::parse(&d.to_json()).unwrap();
        assert_eq!(again.file, d.file);
        assert_eq!(again.to_json(), d.to_json());
        assert_eq!(d.ln_delta_min.exact, Some(LogCombination::ln_int(49)));
        assert_eq!(d.fibers()[0].p, 5);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = ThetaDataDescriptor::parse("{\n  \"schema\": 1,\n  oops").unwrap_err();
        assert!(matches!(&err, Error::Parse(m) if m.contains("line 3")), "{err}");
    }

    #[test]
    fn validation_messages() {
        let msg = with(|f| f.l = 3).unwrap_err().to_string();
        assert!(msg.contains("pole of eps_l"), "{msg}");
        assert!(with(|f| f.l = 2).unwrap_err().to_string().contains("theta data hypothesis"));
        assert_eq!(invariant_of(with(|f| f.l = 9)), "l_prime_gt_3");
        assert_eq!(invariant_of(with(|f| f.deg_f = 0)), "deg_F");
        assert_eq!(invariant_of(with(|f| f.fibers[0].places[0].f0 = 2)), "fiber_degree");
        let msg = with(|f| f.fibers[0].places[0].bad = None).unwrap_err().to_string();
        assert!(msg.contains("non-empty set of bad multiplicative places"), "{msg}");
        assert_eq!(
            invariant_of(with(|f| f.fibers[0].places[0].bad.as_mut().unwrap().ord_delta = Some(2))),
            "ogg_tate"
        );
        assert_eq!(
            invariant_of(with(|f| f.fibers[0].places[0].diff_k = ratio(1, 3))),
            "different_exponent"
        );
        assert_eq!(invariant_of(with(|f| f.invariants.cond = Some("7".into()))), "cond");
        assert_eq!(invariant_of(with(|f| f.invariants.ln_cond = None)), "cond");
        assert_eq!(invariant_of(with(|f| f.schema = 2)), "schema");
    }

    #[test]
    fn warnings_are_collected() {
        let d = with(|f| f.fibers[0].places[0].e_k = 1).unwrap_err();
        // eK = 1 with diffK = 1/2 is itself invalid; fix the different too.
        assert_eq!(invariant_of(Err(d)), "different_exponent");
        let d = with(|f| {
            f.fibers[0].places[0].e_k = 1;
            f.fibers[0].places[0].diff_k = int(0);
        })
        .unwrap();
        assert!(d.warnings.iter().any(|w| w.contains("eK = 1")));
    }

    #[test]
    fn probabilities() {
        let v = |e0, f0| PlaceRecord { e0, f0, e_k: e0, f_k: f0, diff_k: int(0), bad: None, divides_diff_f: None };
        assert_eq!(place_probability(&v(3, 1), 3), int(1));
        assert_eq!(place_probability(&v(1, 1), 2), ratio(1, 2));
        let fiber = [v(2, 1), v(1, 2), v(1, 1)];
        let ps: Vec<_> = fiber.iter().map(|x| place_probability(x, 5)).collect();
        assert_eq!(ps, vec![ratio(2, 5), ratio(2, 5), ratio(1, 5)]);
        assert_eq!(ps.iter().sum::<ExactRational>(), int(1));
    }

    #[test]
    fn degrees_and_pilots() {
        assert!(normalized_degree(&PilotDivisor::default(), 3).is_zero());
        let single = PilotDivisor {
            entries: vec![PilotEntry { p: 2, place: 0, f0: 1, coefficient: int(1) }],
        };
        assert_eq!(normalized_degree(&single, 1), LogCombination::ln_prime(2));
        // Pulling back along a totally ramified degree-k extension multiplies
        // coefficients by k (f^*[v] = e [w]) and d0 by k.
        let pulled = PilotDivisor {
            entries: vec![PilotEntry { p: 2, place: 0, f0: 1, coefficient: int(3) }],
        };
        assert_eq!(normalized_degree(&pulled, 3), normalized_degree(&single, 1));

        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        let q = q_pilot(&d).unwrap();
        assert_eq!(q.entries[0].coefficient, ratio(1, 10));
        let t = theta_pilot(&d).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].entries[0].coefficient, ratio(4, 10));
    }

    #[test]
    fn j_square_means() {
        assert_eq!(mean_j_squared(5), ratio(5, 2));
        assert_eq!(mean_j_squared(7), ratio(14, 3));
        assert_eq!(mean_j_squared(11), int(11));
        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        let rel = pilot_degree_relation_check(&d).unwrap();
        assert_eq!(rel.verdict, Verdict::Holds);
    }

    #[test]
    fn qpilot_residual() {
        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        let chk = qpilot_discriminant_check(&d).unwrap();
        assert_eq!(chk.verdict, Verdict::Holds);
        assert!(chk.exact);
        let d = with(|f| {
            f.invariants.delta_min = None;
            f.invariants.ln_delta_min = Some("1 + 2*ln(7)".into());
        })
        .unwrap();
        let chk = qpilot_discriminant_check(&d).unwrap();
        assert_eq!(chk.verdict, Verdict::Fails);
        // Residual -1/(2 l [F:Q]) = -1/20.
        assert_eq!(chk.residual.to_decimal(10), "-0.0500000000");
    }

    #[test]
    fn base_change() {
        assert_eq!(base_change_check(&[(1, 1)], 1, 3, 1, 5).unwrap(), Verdict::Holds);
        assert_eq!(base_change_check(&[(1, 1), (1, 1)], 2, 2, 1, 5).unwrap(), Verdict::Holds);
        assert!(base_change_check(&[(1, 1)], 2, 2, 1, 5).is_err());
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let lifts: Vec<(u64, u64)> = (0..rng.gen_range(1..5))
                .map(|_| (rng.gen_range(1..4), rng.gen_range(1..4)))
                .collect();
            let degree = lifts.iter().map(|(e, f)| e * f).sum();
            let v = base_change_check(&lifts, degree, rng.gen_range(1..9), rng.gen_range(1..3), 7).unwrap();
            assert_eq!(v, Verdict::Holds);
        }
    }

    #[test]
    fn nos_examples() {
        assert!(nos_ramified_predicate(1, 7, 5, false, false).consistent);
        assert!(!nos_ramified_predicate(2, 7, 5, false, false).consistent);
        assert!(nos_ramified_predicate(4, 5, 5, false, false).consistent);
        assert!(!nos_ramified_predicate(2, 5, 5, false, false).consistent);
        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        assert!(nos_findings(&d).is_empty());
    }

    #[test]
    fn diff_disc_bridge_is_exact() {
        let d = ThetaDataDescriptor::parse(&sample_json()).unwrap();
        let b = diff_disc_bridge(&d).unwrap();
        assert_eq!(b.verdict, Verdict::Holds);
        assert_eq!(ramified_primes(&d), vec![5, 7]);
    }

    #[test]
    fn large_integers_fall_back_to_values() {
        let big = (BigInt::from(1_000_003u64).pow(3) * BigInt::from(4)).to_string();
        let q = Quantity::parse_int(&big, "x").unwrap();
        assert!(q.exact.is_none());
        let want = LogValue::ln_int(2) * LogValue::from_i64(2) + LogValue::ln_int(1_000_003) * LogValue::from_i64(3);
        assert_eq!(q.value.to_decimal(30), want.to_decimal(30));
        let huge = BigInt::from(2).pow(5000).to_string();
        assert!(Quantity::parse_int(&huge, "x").is_err());
    }
}
