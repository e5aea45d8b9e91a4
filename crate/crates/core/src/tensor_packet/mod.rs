//! Tensor packets `K_1 ⊗ ... ⊗ K_m` of local fields: norms of the different
//! vector, the order of the descent multiplier `beta`, and the radius of the
//! poly-disc hull bounding a packet.

pub mod descent;

use num_traits::Zero;
use serde::Serialize;

use crate::arith::logexpr::{Atom, LogCombination};
use crate::arith::rational::{self, ExactRational};
use crate::arith::real::LogValue;
use crate::error::{Error, Result};
use crate::local_field::{is_small, LocalFieldData};

pub use descent::{idempotent_set, verify_descent, DescentReport, ScaledElement, TensorAlgebra};

/// Nonempty list of local fields over a common prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorFactorList {
    factors: Vec<LocalFieldData>,
}

impl TensorFactorList {
    pub fn new(factors: Vec<LocalFieldData>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::Input("a tensor packet needs at least one factor".into()));
        };
        if factors.iter().any(|f| f.p != first.p) {
            return Err(Error::Input("tensor factors lie over different primes".into()));
        }
        Ok(TensorFactorList { factors })
    }

    pub fn p(&self) -> u64 {
        self.factors[0].p
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn factors(&self) -> &[LocalFieldData] {
        &self.factors
    }
}

/// `(l^1, l^infinity)` norms of the vector of different exponents.
pub fn diff_norms(factors: &TensorFactorList) -> (ExactRational, ExactRational) {
    let mut l1 = ExactRational::zero();
    let mut linf = ExactRational::zero();
    for f in factors.factors() {
        l1 += &f.diff_exp;
        if f.diff_exp > linf {
            linf = f.diff_exp.clone();
        }
    }
    (l1, linf)
}

/// `ord_p(beta) = ||diff||_1 - ||diff||_inf`.
pub fn beta_order(factors: &TensorFactorList) -> ExactRational {
    let (l1, linf) = diff_norms(factors);
    l1 - linf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    Unramified,
    Small,
    General,
    Archimedean,
}

/// `ln R` of a poly-disc radius, kept as an exact log combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolyRadiusBound {
    pub ln_radius: LogCombination,
    pub case_tag: CaseTag,
}

impl PolyRadiusBound {
    pub fn value(&self) -> LogValue {
        self.ln_radius.evaluate()
    }
}

/// Worst-case radius
/// `-floor(a + ||diff||_inf - ||diff||_1) ln p + m ln c_p + sum ln e_i`.
pub fn worst_case_radius(factors: &TensorFactorList, a_ord: &ExactRational) -> Result<PolyRadiusBound> {
    if *a_ord < ExactRational::zero() {
        return Err(Error::Domain("ord_p(a) must be non-negative".into()));
    }
    let p = factors.p();
    let (l1, linf) = diff_norms(factors);
    let floor = rational::floor(&(a_ord + linf - l1));
    let mut c = LogCombination::atom(Atom::LnPrime(p), -ExactRational::from_integer(floor));
    c.add_scaled(&LogCombination::ln_b(p), &rational::int(factors.len() as i64));
    for f in factors.factors() {
        c += &LogCombination::ln_int(f.e);
    }
    Ok(PolyRadiusBound {
        ln_radius: c,
        case_tag: CaseTag::General,
    })
}

/// One coordinate of a packet: a local field, or an archimedean place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PacketFactor {
    Local(LocalFieldData),
    Archimedean,
}

/// The four-case hull radius of a packet of `j + 1` factors.
///
/// Unramified packets give `0`; small packets `-floor(a - ord beta) ln p`;
/// general packets add `(j+1) ln b_p + sum ln e_i`; archimedean packets give
/// `(j+1) ln pi`.
pub fn hull_radius(factors: &[PacketFactor], a_ord: &ExactRational) -> Result<PolyRadiusBound> {
    if factors.is_empty() {
        return Err(Error::Input("a tensor packet needs at least one factor".into()));
    }
    let arch = factors.iter().filter(|f| matches!(f, PacketFactor::Archimedean)).count();
    if arch == factors.len() {
        return Ok(PolyRadiusBound {
            ln_radius: LogCombination::atom(Atom::LnPi, rational::int(arch as i64)),
            case_tag: CaseTag::Archimedean,
        });
    }
    if arch > 0 {
        return Err(Error::Input(
            "packet mixes archimedean and non-archimedean factors".into(),
        ));
    }
    let locals: Vec<LocalFieldData> = factors
        .iter()
        .map(|f| match f {
            PacketFactor::Local(d) => d.clone(),
            PacketFactor::Archimedean => unreachable!(),
        })
        .collect();
    hull_radius_local(&TensorFactorList::new(locals)?, a_ord)
}

pub fn hull_radius_local(factors: &TensorFactorList, a_ord: &ExactRational) -> Result<PolyRadiusBound> {
    if *a_ord < ExactRational::zero() {
        return Err(Error::Domain("ord_p(a) must be non-negative".into()));
    }
    let fs = factors.factors();
    if fs.iter().all(LocalFieldData::is_unramified) {
        return Ok(PolyRadiusBound {
            ln_radius: LogCombination::zero(),
            case_tag: CaseTag::Unramified,
        });
    }
    let p = factors.p();
    let floor = rational::floor(&(a_ord - beta_order(factors)));
    let mut c = LogCombination::atom(Atom::LnPrime(p), -ExactRational::from_integer(floor));
    if fs.iter().all(is_small) {
        return Ok(PolyRadiusBound {
            ln_radius: c,
            case_tag: CaseTag::Small,
        });
    }
    c.add_scaled(&LogCombination::ln_b(p), &rational::int(fs.len() as i64));
    for f in fs {
        c += &LogCombination::ln_int(f.e);
    }
    Ok(PolyRadiusBound {
        ln_radius: c,
        case_tag: CaseTag::General,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::{int, ratio};
    use rand::{Rng, SeedableRng};

    fn packet(p: u64, es: &[u64]) -> TensorFactorList {
        TensorFactorList::new(es.iter().map(|&e| LocalFieldData::new(p, e, 1).unwrap()).collect()).unwrap()
    }

    #[test]
    fn norms_examples() {
        assert_eq!(diff_norms(&packet(7, &[1, 1])), (int(0), int(0)));
        assert_eq!(diff_norms(&packet(7, &[3, 3])), (ratio(4, 3), ratio(2, 3)));
        let (l1, linf) = diff_norms(&packet(7, &[6]));
        assert_eq!(l1, linf);
        assert!(TensorFactorList::new(vec![]).is_err());
        let mixed = vec![
            LocalFieldData::new(5, 1, 1).unwrap(),
            LocalFieldData::new(7, 1, 1).unwrap(),
        ];
        assert!(TensorFactorList::new(mixed).is_err());
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_order(&packet(7, &[6])), int(0));
        assert_eq!(beta_order(&packet(7, &[3, 3])), ratio(2, 3));
        assert_eq!(beta_order(&packet(7, &[1, 3, 1])), int(0));
        assert_eq!(beta_order(&packet(7, &[1, 3, 2])), ratio(1, 2));
    }

    #[test]
    fn beta_properties_on_random_vectors() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = rng.gen_range(1..6);
            let diffs: Vec<ExactRational> = (0..m)
                .map(|_| if rng.gen_bool(0.3) { int(0) } else { ratio(rng.gen_range(0..40), rng.gen_range(1..9)) })
                .collect();
            let fields = diffs
                .iter()
                .map(|d| LocalFieldData { p: 2, e: 1, f: 1, diff_exp: d.clone(), wild: true })
                .collect();
            let t = TensorFactorList::new(fields).unwrap();
            let (l1, _) = diff_norms(&t);
            let b = beta_order(&t);
            assert!(b >= int(0));
            assert!(b <= l1 * ratio(m as i64 - 1, m as i64));
            let nonzero = diffs.iter().filter(|d| !d.is_zero()).count();
            assert_eq!(b.is_zero(), nonzero <= 1);
        }
    }

    #[test]
    fn worst_case_examples() {
        let p = 1_000_003;
        let w = worst_case_radius(&packet(p, &[1]), &int(0)).unwrap();
        assert_eq!(w.ln_radius, LogCombination::ln_b(p));

        let w = worst_case_radius(&packet(7, &[3, 3]), &int(2)).unwrap();
        let mut want = LogCombination::atom(Atom::LnPrime(7), int(-1));
        want.add_scaled(&LogCombination::ln_b(7), &int(2));
        want.add_term(Atom::LnPrime(3), int(2));
        assert_eq!(w.ln_radius, want);

        let w = worst_case_radius(&packet(7, &[3, 3]), &int(0)).unwrap();
        assert!(w.ln_radius.coefficient(Atom::LnPrime(7)) >= int(1));
    }

    #[test]
    fn hull_cases() {
        let h = hull_radius_local(&packet(7, &[1, 1]), &int(3)).unwrap();
        assert_eq!(h.case_tag, CaseTag::Unramified);
        assert!(h.ln_radius.is_zero());

        let h = hull_radius(&[PacketFactor::Archimedean, PacketFactor::Archimedean], &int(0)).unwrap();
        assert_eq!(h.ln_radius, LogCombination::atom(Atom::LnPi, int(2)));

        let h = hull_radius_local(&packet(7, &[3, 3]), &int(2)).unwrap();
        assert_eq!(h.case_tag, CaseTag::Small);
        assert_eq!(h.ln_radius, LogCombination::atom(Atom::LnPrime(7), int(-1)));

        let h = hull_radius_local(&packet(7, &[6, 1]), &int(1)).unwrap();
        assert_eq!(h.case_tag, CaseTag::General);

        let mixed = [
            PacketFactor::Archimedean,
            PacketFactor::Local(LocalFieldData::unramified(5)),
        ];
        assert!(matches!(hull_radius(&mixed, &int(0)), Err(Error::Input(_))));
    }

    #[test]
    fn small_case_bounds_the_sharp_small_image() {
        // In the small case each coordinate's log image is pi_i O_{K_i}; the
        // lemma's value drops those radii, so it dominates the sharp product.
        for es in [[2u64, 3], [3, 3], [1, 2], [4, 5]] {
            for a in [int(0), ratio(1, 2), int(2), ratio(7, 3)] {
                let t = packet(11, &es);
                let h = hull_radius_local(&t, &a).unwrap();
                let mut sharp = h.ln_radius.clone();
                for e in es {
                    sharp.add_term(Atom::LnPrime(11), -ratio(1, e as i64));
                }
                assert!(sharp.evaluate() <= h.value());
            }
        }
    }

    #[test]
    fn small_case_versus_worst_case() {
        // The small-case value exceeds the worst-case formula whenever
        // m ln c_p + sum ln e_i < 0; at p = 7, e = (3, 3) that sum is -1.134.
        let t = packet(7, &[3, 3]);
        let small = hull_radius_local(&t, &int(2)).unwrap().value();
        let worst = worst_case_radius(&t, &int(2)).unwrap().value();
        assert!(worst < small);
        assert_eq!((small - worst).to_decimal(3), "1.134");
        // For large ramification the worst case is the larger one.
        let t = packet(101, &[50, 50]);
        let small = hull_radius_local(&t, &int(2)).unwrap().value();
        let worst = worst_case_radius(&t, &int(2)).unwrap().value();
        assert!(small <= worst);
    }
}
