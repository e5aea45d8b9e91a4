//! Verification suites over the unconditional identities, bounds and oracles.
//! Each suite is deterministic; random inputs come from fixed seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::primes::{dusart_bound, is_prime, pi_exact};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::{LogValue, Verdict};
use crate::error::Result;
use crate::expectation::{self, exact_terms, jensen_check, prime_terms};
use crate::global_model::{BadData, Fiber, PlaceRecord};
use crate::padic_oracle::{crude_analytic_bound, crude_min_term, TruncatedEisensteinRing};
use crate::synth::{generate, GenerateConfig};
use crate::szpiro::{
    self, derive_constants, five_quarters_step, five_quarters_threshold, identity_check, BABY_THRESHOLD,
};
use crate::tensor_packet::descent::kummer_towers;
use crate::tensor_packet::verify_descent;

pub const SUITES: [&str; 8] = ["identities", "constants", "dusart", "padic", "descent", "expectation", "baby", "jensen"];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Findings that are reported but not asserted.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub informational: Vec<String>,
}

#[derive(Default)]
struct Builder {
    checks: Vec<Check>,
    info: Vec<String>,
}

impl Builder {
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    fn finish(self, suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            passed: self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            informational: self.info,
        }
    }
}

fn holds(v: Verdict) -> bool {
    v != Verdict::Fails
}

pub fn run(name: &str) -> Result<SuiteReport> {
    match name {
        "identities" => identities(),
        "constants" => constants(),
        "dusart" => dusart(),
        "padic" => padic(),
        "descent" => descent(),
        "expectation" => expectation_oracle(),
        "baby" => baby(),
        "jensen" => jensen(),
        _ => Err(crate::Error::Input(format!(
            "unknown suite {name:?}; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

pub fn run_all() -> Result<Vec<SuiteReport>> {
    SUITES.iter().map(|s| run(s)).collect()
}

pub fn identities() -> Result<SuiteReport> {
    let mut b = Builder::default();
    for l in (5..=199).filter(|&l| is_prime(l)) {
        let c = identity_check(l)?;
        b.check(format!("l = {l}"), c.all(), if c.all() { String::new() } else { format!("{c:?}") });
    }
    Ok(b.finish("identities"))
}

pub fn constants() -> Result<SuiteReport> {
    let mut b = Builder::default();
    let d = derive_constants(5, 1)?;
    b.check("B0 candidate", d.b0_matches, format!("{} vs {}", d.b0_candidate, szpiro::PUBLISHED_B0));
    let dev = d.a0_relative_deviation.to_f64();
    b.check(
        "A0 candidate within 1e-4",
        dev < 1e-4,
        format!("{} vs {} (relative {dev:.3e})", d.a0_candidate, szpiro::PUBLISHED_A0),
    );
    b.check("d1 = 23040 * 12", 23040 * 12 == szpiro::D1, szpiro::D1.to_string());
    for (l, d0) in [(5, 1), (7, 2)] {
        let c = derive_constants(l, d0)?;
        let want = 276_480u128 * (l as u128).pow(4) * d0 as u128;
        b.check(format!("B_({l},{d0})"), c.constants.b == want, c.constants.b.to_string());
    }
    Ok(b.finish("constants"))
}

pub fn dusart() -> Result<SuiteReport> {
    let mut b = Builder::default();
    for k in 3..=7u32 {
        let x = 10u64.pow(k);
        let pi = pi_exact(x)?;
        let bound = dusart_bound(&LogValue::from_i64(x as i64))?;
        let ok = holds(LogValue::compare_le(&LogValue::from_i64(pi as i64), &bound));
        b.check(format!("pi(10^{k})"), ok, format!("{pi} <= {}", bound.to_decimal(3)));
    }
    Ok(b.finish("dusart"))
}

pub fn padic() -> Result<SuiteReport> {
    let mut b = Builder::default();
    for v in [rational::int(1), rational::ratio(3, 2), rational::int(2), rational::ratio(5, 2), rational::int(3)] {
        for p in [2, 3, 5, 7] {
            let exact = crude_min_term(&v, p, 64)?;
            let bound = crude_analytic_bound(&v, p);
            let ok = holds(LogValue::compare_le(&bound, &LogValue::from_rational(&exact)));
            b.check(
                format!("crude minimum v = {} p = {p}", rational::format(&v)),
                ok,
                format!("{} >= {}", rational::format(&exact), bound.to_decimal(6)),
            );
        }
    }
    for p in [2u64, 3, 5, 7] {
        for e in [1u32, 2, 3, 4, 6].into_iter().filter(|&e| (p - 1) % e as u64 == 0) {
            let r = TruncatedEisensteinRing::new(p, e, 10)?;
            let mut ok = true;
            let mut detail = String::new();
            for k in 1..3 * e {
                let ord = rational::ratio(k as i64, e as i64);
                if ord <= rational::ratio(1, p as i64 - 1) {
                    continue;
                }
                let u = r.add(&r.one(), &r.scale(&r.uniformizer_pow(k), p - 1));
                let got = r.valuation(&r.log_series_auto(&u)?)?;
                if got != ord {
                    ok = false;
                    detail = format!("k = {k}: ord log = {}", rational::format(&got));
                }
            }
            b.check(format!("ord log(1+a) = ord a, p = {p} e = {e}"), ok, detail);
        }
    }
    Ok(b.finish("padic"))
}

pub fn descent() -> Result<SuiteReport> {
    let mut b = Builder::default();
    for p in [5, 7, 13] {
        for es in kummer_towers(p, &[1, 2, 3, 4, 6], 3) {
            let rep = verify_descent(&es, p)?;
            let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            b.check(format!("p = {p} e = {es:?}"), rep.passed, failed.join(", "));
        }
    }
    Ok(b.finish("descent"))
}

/// Random fibers with at most three places, tame lifts and some bad places.
pub fn small_fibers(seed: u64, count: usize) -> Vec<(Fiber, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let p = [5u64, 7, 11, 13][rng.gen_range(0..4)];
            let n = rng.gen_range(1..=3);
            let mut d0 = 0;
            let places = (0..n)
                .map(|_| {
                    let f0 = rng.gen_range(1..=2);
                    d0 += f0;
                    let e_k = [1u64, 2, 3, 4, 6].into_iter().filter(|e| e % p != 0).nth(rng.gen_range(0..4)).unwrap_or(1);
                    PlaceRecord {
                        e0: 1,
                        f0,
                        e_k,
                        f_k: 1,
                        diff_k: rational::ratio(e_k as i64 - 1, e_k as i64),
                        bad: rng.gen_bool(0.5).then(|| BadData { ord_q: rng.gen_range(1..=4), ord_delta: None }),
                        divides_diff_f: None,
                    }
                })
                .collect();
            (Fiber { p, places }, d0)
        })
        .collect()
}

pub fn expectation_oracle() -> Result<SuiteReport> {
    let mut b = Builder::default();
    for (i, (fiber, d0)) in small_fibers(2024, 40).into_iter().enumerate() {
        for l in [5, 7] {
            let t = prime_terms(&fiber, d0, l);
            let e = exact_terms(&fiber, d0, l, expectation::DEFAULT_TUPLE_BUDGET)?;
            let tag = format!("fiber {i} (p = {}, {} places) l = {l}", fiber.p, fiber.places.len());
            b.check(format!("{tag}: term I exact"), e.term_i.exact == t.term_i.exact, "");
            b.check(
                format!("{tag}: term II bound"),
                holds(LogValue::compare_le(&e.term_ii.value, &t.term_ii_bound)),
                "",
            );
            let iii = e.term_iii.exact.as_ref().map(|c| c.coefficient(crate::arith::logexpr::Atom::One));
            b.check(
                format!("{tag}: term III bound"),
                iii.as_ref() == Some(&t.term_iii.exact) && t.term_iii.exact <= t.term_iii.bound,
                "",
            );
            b.check(
                format!("{tag}: term V bound"),
                holds(LogValue::compare_le(&e.term_v.value, &t.term_v_bound.value)),
                "",
            );
            b.info.push(format!("{tag}: term IV direction {:?}", t.term_iv.direction));
        }
    }
    Ok(b.finish("expectation"))
}

pub fn baby() -> Result<SuiteReport> {
    let mut b = Builder::default();
    b.check("2/ln(6840) + 1 <= 5/4", holds(five_quarters_threshold(BABY_THRESHOLD)), "");
    let mut rng = ChaCha8Rng::seed_from_u64(6840);
    let mut all = true;
    for _ in 0..100 {
        let big_d = rng.gen_range(BABY_THRESHOLD..=1_000_000_000_000);
        let d = rng.gen_range(BABY_THRESHOLD..=10_000_000);
        if !holds(five_quarters_step(&LogValue::ln_int(big_d), &LogValue::ln_int(d))) {
            all = false;
            b.info.push(format!("5/4 step fails at D = {big_d}, d = {d}"));
        }
    }
    b.check("(ln D + 2)(ln d + 2) <= (25/16) ln D ln d on 100 pairs", all, "");
    for seed in 1..=20u64 {
        let cfg = GenerateConfig { seed, d0: 1 + seed % 3, l: [5, 7, 11][seed as usize % 3], fibers: 3 };
        let desc = generate(&cfg)?;
        let r = szpiro::baby_rhs(&desc)?;
        let szpiro::Components::Baby(c) = &r.components else { unreachable!() };
        b.check(
            format!("Diff bound, generated seed {seed}"),
            holds(c.diff_bound.verdict),
            format!("{} <= {}", c.diff_bound.lhs.to_decimal(6), c.diff_bound.rhs.to_decimal(6)),
        );
    }
    Ok(b.finish("baby"))
}

pub fn jensen() -> Result<SuiteReport> {
    let mut b = Builder::default();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut left = true;
    let mut right = true;
    for _ in 0..100 {
        let samples: Vec<(ExactRational, ExactRational)> = (0..rng.gen_range(1..6))
            .map(|_| {
                (
                    rational::int(rng.gen_range(1..10)),
                    rational::ratio(rng.gen_range(1..50), rng.gen_range(1..10)),
                )
            })
            .collect();
        let r = jensen_check(&samples)?;
        left &= holds(r.left);
        right &= holds(r.right);
    }
    b.check("exp(E ln X) <= E X on 100 distributions", left, "");
    b.check("E X <= ln E(exp X) on 100 distributions", right, "");
    Ok(b.finish("jensen"))
}
