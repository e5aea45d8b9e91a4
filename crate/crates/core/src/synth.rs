//! Seeded generation of consistent descriptors.
//!
//! Fibers satisfy `sum e0 f0 = d0`, bad places carry `ord_delta = ord_q`,
//! `ln_delta_min` matches the q-pilot degree exactly, ramification follows
//! the Neron-Ogg-Shafarevich flags, and `ln_disc_K = [K:Q] E(diff) ln p`.

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::primes::prime_sieve;
use crate::arith::rational;
use crate::error::{Error, Result};
use crate::global_model::{
    validate_l, BadData, DescriptorFile, Fiber, PlaceRecord, RawInvariants, ThetaDataDescriptor, SCHEMA_VERSION,
};

/// Fiber primes are drawn from below this bound.
const PRIME_POOL: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerateConfig {
    pub seed: u64,
    pub d0: u64,
    pub l: u64,
    pub fibers: usize,
}

fn tame_ramification(rng: &mut ChaCha8Rng, p: u64, base: u64) -> u64 {
    let choices: Vec<u64> = [2, 3, 4, 6]
        .iter()
        .map(|m| base * m)
        .filter(|e| e % p != 0)
        .collect();
    *choices.choose(rng).unwrap_or(&base)
}

fn place(rng: &mut ChaCha8Rng, p: u64, l: u64, size: u64) -> PlaceRecord {
    let e0 = if size > 1 && size % p != 0 && rng.gen_bool(0.3) { size } else { 1 };
    let f0 = size / e0;
    let roll: f64 = rng.gen();
    let (e_k, bad, flag) = if roll < 0.4 {
        (e0 * l, Some(BadData { ord_q: rng.gen_range(1..=4), ord_delta: None }), None)
    } else if e0 > 1 {
        (tame_ramification(rng, p, e0), None, None)
    } else if roll < 0.6 {
        (tame_ramification(rng, p, 1), None, Some(true))
    } else {
        (1, None, None)
    };
    let bad = bad.map(|b| BadData { ord_delta: Some(b.ord_q), ..b });
    PlaceRecord {
        e0,
        f0,
        e_k,
        f_k: 1,
        diff_k: rational::ratio(e_k as i64 - 1, e_k as i64),
        bad,
        divides_diff_f: flag,
    }
}

pub fn generate(cfg: &GenerateConfig) -> Result<ThetaDataDescriptor> {
    validate_l(cfg.l)?;
    if cfg.d0 == 0 || cfg.fibers == 0 {
        return Err(Error::Input("generate needs d0 >= 1 and at least one fiber".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool: Vec<u64> = prime_sieve(PRIME_POOL)?.into_iter().filter(|&p| p != cfg.l).collect();
    if cfg.fibers > pool.len() {
        return Err(Error::Input(format!("at most {} fibers can be generated", pool.len())));
    }
    let mut primes: Vec<u64> = pool.choose_multiple(&mut rng, cfg.fibers).copied().collect();
    primes.sort_unstable();
    let k = rng.gen_range(1..=2u64);

    let mut fibers = Vec::new();
    for &p in &primes {
        let mut places = Vec::new();
        let mut rest = cfg.d0;
        while rest > 0 {
            let size = rng.gen_range(1..=rest.min(3));
            places.push(place(&mut rng, p, cfg.l, size));
            rest -= size;
        }
        fibers.push(Fiber { p, places });
    }
    if !fibers.iter().flat_map(|f| &f.places).any(PlaceRecord::is_bad) {
        let v = &mut fibers[0].places[0];
        let ord = rng.gen_range(1..=4);
        v.e_k = v.e0 * cfg.l;
        v.diff_k = rational::ratio(v.e_k as i64 - 1, v.e_k as i64);
        v.bad = Some(BadData { ord_q: ord, ord_delta: Some(ord) });
        v.divides_diff_f = None;
    }

    let m = fibers.iter().flat_map(|f| &f.places).fold(1u64, |acc, v| acc.lcm(&v.e_k));
    let deg_f = k * cfg.d0;
    let deg_k = deg_f * m;
    let mut ln_delta = LogCombination::zero();
    let mut ln_cond = LogCombination::zero();
    let mut ln_disc_f = LogCombination::zero();
    let mut ln_disc_k = LogCombination::zero();
    for f in &fibers {
        let ln_p = Atom::LnPrime(f.p);
        for v in &f.places {
            let f0 = rational::int((k * v.f0) as i64);
            if let Some(b) = &v.bad {
                ln_delta.add_term(ln_p, &f0 * rational::int(b.ord_q as i64));
                ln_cond.add_term(ln_p, f0.clone());
            }
            ln_disc_f.add_term(ln_p, &f0 * rational::int(v.e0 as i64 - 1));
            let weight = rational::ratio((deg_k * v.e0 * v.f0) as i64, cfg.d0 as i64);
            ln_disc_k.add_term(ln_p, weight * &v.diff_k);
        }
    }
    let file = DescriptorFile {
        schema: SCHEMA_VERSION,
        l: cfg.l,
        d0: cfg.d0,
        deg_f,
        fibers,
        invariants: RawInvariants {
            ln_delta_min: Some(ln_delta.to_string()),
            ln_cond: Some(ln_cond.to_string()),
            ln_disc_f: Some(ln_disc_f.to_string()),
            deg_k: Some(deg_k),
            ln_disc_k: Some(ln_disc_k.to_string()),
            ..RawInvariants::default()
        },
    };
    ThetaDataDescriptor::validate(file)
}
