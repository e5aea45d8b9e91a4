//! CRT idempotents of Kummer tensor products and the descent check
//! `beta * O_L ⊂ T`.
//!
//! For `K_i = Q_p(p^{1/e_i})` with every `e_i | p - 1`, the factor with the
//! largest different is placed first and the product is written as
//! `K_1[x_2, ..., x_m]/(x_i^{e_i} - p)`. After base change to
//! `O_E = Z_p[p^{1/E}]`, `E = lcm(e_i)`, every `x_i^{e_i} - p` splits with
//! roots `alpha_{i,k} = zeta_{e_i}^k p^{1/e_i}`, so the algebra becomes a
//! product of copies of `K_E` indexed by root tuples. Idempotents of the
//! original product are the sums of these over `Gal(K_E/K_1)`-orbits.

use num_integer::Integer;
use serde::Serialize;

use crate::arith::rational::{self, ExactRational};
use crate::error::{Error, Result};
use crate::local_field::LocalFieldData;
use crate::padic_oracle::{RingElement, TruncatedEisensteinRing, DEFAULT_PRECISION};

use super::{beta_order, TensorFactorList};

/// Largest number of split components the oracle will build.
pub const MAX_SPLIT_COMPONENTS: u64 = 1296;

/// `O_E[x_2, ..., x_m]/(x_i^{e_i} - p)`, stored as coefficient vectors over
/// the monomials `x^t` with `t_i < e_i` in mixed radix (last index fastest).
#[derive(Debug, Clone)]
pub struct TensorAlgebra {
    ring: TruncatedEisensteinRing,
    exps: Vec<u32>,
    dim: usize,
}

/// `coeffs / p^shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledElement {
    pub coeffs: Vec<RingElement>,
    pub shift: u32,
}

impl TensorAlgebra {
    fn new(ring: TruncatedEisensteinRing, exps: Vec<u32>) -> Self {
        let dim = exps.iter().map(|&e| e as usize).product();
        TensorAlgebra { ring, exps, dim }
    }

    pub fn ring(&self) -> &TruncatedEisensteinRing {
        &self.ring
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index_to_tuple(&self, mut idx: usize) -> Vec<u32> {
        let mut t = vec![0; self.exps.len()];
        for (slot, &e) in t.iter_mut().zip(&self.exps).rev() {
            *slot = (idx % e as usize) as u32;
            idx /= e as usize;
        }
        t
    }

    fn tuple_to_index(&self, t: &[u32]) -> usize {
        t.iter().zip(&self.exps).fold(0, |acc, (&ti, &e)| acc * e as usize + ti as usize)
    }

    pub fn zero(&self) -> Vec<RingElement> {
        vec![self.ring.zero(); self.dim]
    }

    pub fn constant(&self, c: &RingElement) -> Vec<RingElement> {
        let mut v = self.zero();
        v[0] = c.clone();
        v
    }

    pub fn add(&self, a: &[RingElement], b: &[RingElement]) -> Vec<RingElement> {
        a.iter().zip(b).map(|(x, y)| self.ring.add(x, y)).collect()
    }

    pub fn scale(&self, a: &[RingElement], c: &RingElement) -> Vec<RingElement> {
        a.iter().map(|x| self.ring.mul(x, c)).collect()
    }

    /// Full product, reducing each `x_i^{e_i}` to `p`.
    pub fn mul(&self, a: &[RingElement], b: &[RingElement]) -> Vec<RingElement> {
        let r = &self.ring;
        let p = r.constant(r.p() as i64);
        let mut out = self.zero();
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let ti = self.index_to_tuple(i);
            for (j, y) in b.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let tj = self.index_to_tuple(j);
                let mut t = Vec::with_capacity(ti.len());
                let mut wraps = 0;
                for ((&u, &v), &e) in ti.iter().zip(&tj).zip(&self.exps) {
                    let s = u + v;
                    if s >= e {
                        wraps += 1;
                        t.push(s - e);
                    } else {
                        t.push(s);
                    }
                }
                let mut term = r.mul(x, y);
                for _ in 0..wraps {
                    term = r.mul(&term, &p);
                }
                let k = self.tuple_to_index(&t);
                out[k] = r.add(&out[k], &term);
            }
        }
        out
    }

    /// Expands a pure tensor `prod_i h_i(x_i)`.
    pub fn expand(&self, factors: &[Vec<RingElement>]) -> Vec<RingElement> {
        (0..self.dim)
            .map(|idx| {
                let t = self.index_to_tuple(idx);
                t.iter()
                    .zip(factors)
                    .fold(self.ring.one(), |acc, (&ti, h)| self.ring.mul(&acc, &h[ti as usize]))
            })
            .collect()
    }

    /// Product of univariate polynomials modulo `x^e - p`.
    fn uni_mul(&self, a: &[RingElement], b: &[RingElement], e: u32) -> Vec<RingElement> {
        let r = &self.ring;
        let p = r.constant(r.p() as i64);
        let e = e as usize;
        let mut out = vec![r.zero(); e];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let mut term = r.mul(x, y);
                let mut k = i + j;
                if k >= e {
                    k -= e;
                    term = r.mul(&term, &p);
                }
                out[k] = r.add(&out[k], &term);
            }
        }
        out
    }

    fn p_pow(&self, k: u32) -> RingElement {
        self.ring.uniformizer_pow(k * self.ring.e())
    }

    fn is_zero(&self, a: &[RingElement]) -> bool {
        a.iter().all(RingElement::is_zero)
    }
}

/// One split component: the root tuple `(k_2, ..., k_m)` and the factors of
/// the numerator of its idempotent, which is a pure tensor.
struct SplitComponent {
    roots: Vec<u32>,
    alphas: Vec<RingElement>,
    numerator: Vec<Vec<RingElement>>,
}

struct Tower {
    p: u64,
    es: Vec<u32>,
    algebra: TensorAlgebra,
    shift: u32,
}

impl Tower {
    fn new(e_list: &[u32], p: u64) -> Result<Self> {
        if e_list.is_empty() {
            return Err(Error::Input("empty tower".into()));
        }
        for &e in e_list {
            if e == 0 || (p - 1) % e as u64 != 0 {
                return Err(Error::Unsupported(format!(
                    "ramification index {e} does not divide p - 1 = {}",
                    p - 1
                )));
            }
        }
        let mut es = e_list.to_vec();
        es.sort_unstable_by(|a, b| b.cmp(a));
        let split: u64 = es[1..].iter().map(|&e| e as u64).product();
        if split > MAX_SPLIT_COMPONENTS {
            return Err(Error::Resource(format!(
                "{split} split components exceed the oracle budget {MAX_SPLIT_COMPONENTS}"
            )));
        }
        let big_e = es.iter().fold(1u32, |acc, &e| acc.lcm(&e));
        let shift = es[1..].iter().filter(|&&e| e > 1).count() as u32;
        let precision = DEFAULT_PRECISION.max(2 * shift + 4).min(TruncatedEisensteinRing::max_precision(p));
        if precision < 2 * shift + 2 {
            return Err(Error::Precision {
                message: format!("p = {p} leaves too little precision for {shift} denominators"),
                required: 2 * shift + 2,
            });
        }
        let ring = TruncatedEisensteinRing::new(p, big_e, precision)?;
        let algebra = TensorAlgebra::new(ring, es[1..].to_vec());
        Ok(Tower { p, es, algebra, shift })
    }

    fn ring(&self) -> &TruncatedEisensteinRing {
        &self.algebra.ring
    }

    /// `zeta_e^k` inside `O_E`.
    fn zeta(&self, e: u32, k: i64) -> Result<RingElement> {
        let big_e = self.ring().e();
        let k = k.rem_euclid(e as i64) as u32;
        self.ring().teichmuller_root(k * (big_e / e))
    }

    /// `alpha_{e,k} = zeta_e^k p^{1/e}`.
    fn alpha(&self, e: u32, k: u32) -> Result<RingElement> {
        let r = self.ring();
        Ok(r.mul(&self.zeta(e, k as i64)?, &r.uniformizer_pow(r.e() / e)))
    }

    fn component(&self, roots: Vec<u32>) -> Result<SplitComponent> {
        let r = self.ring();
        let mut alphas = Vec::new();
        let mut numerator = Vec::new();
        for (&e, &k) in self.algebra.exps.iter().zip(&roots) {
            let alpha = self.alpha(e, k)?;
            if e == 1 {
                numerator.push(vec![r.one()]);
                alphas.push(alpha);
                continue;
            }
            // f(x)/(x - alpha) = sum_t alpha^{e-1-t} x^t and
            // 1/f'(alpha) = e^{-1} zeta^{-k(e-1)} p^{1/e} / p.
            let e_inv = r.inverse(&r.constant(e as i64))?;
            let c = r.mul(
                &r.mul(&e_inv, &self.zeta(e, -(k as i64) * (e as i64 - 1))?),
                &r.uniformizer_pow(r.e() / e),
            );
            let h = (0..e)
                .map(|t| r.mul(&r.pow(&alpha, (e - 1 - t) as u64), &c))
                .collect();
            numerator.push(h);
            alphas.push(alpha);
        }
        Ok(SplitComponent {
            roots,
            alphas,
            numerator,
        })
    }

    fn components(&self) -> Result<Vec<SplitComponent>> {
        (0..self.algebra.dim)
            .map(|idx| self.component(self.algebra.index_to_tuple(idx)))
            .collect()
    }

    /// `beta = prod_{i>=2} f_i'(x_i) = prod e_i x_i^{e_i - 1}` as a pure tensor.
    fn beta(&self) -> Vec<Vec<RingElement>> {
        let r = self.ring();
        self.algebra
            .exps
            .iter()
            .map(|&e| {
                let mut h = vec![r.zero(); e as usize];
                h[e as usize - 1] = r.constant(e as i64);
                h
            })
            .collect()
    }

    /// Image of `beta` in the component: `prod e_i alpha_i^{e_i - 1}`.
    fn beta_at(&self, comp: &SplitComponent) -> RingElement {
        let r = self.ring();
        self.algebra
            .exps
            .iter()
            .zip(&comp.alphas)
            .fold(r.one(), |acc, (&e, a)| {
                r.mul(&acc, &r.scale(&r.pow(a, e as u64 - 1), e as u64))
            })
    }

    fn factor_list(&self) -> Result<TensorFactorList> {
        let fields = self
            .es
            .iter()
            .map(|&e| LocalFieldData::new(self.p, e as u64, 1))
            .collect::<Result<Vec<_>>>()?;
        TensorFactorList::new(fields)
    }

    /// Gal(K_E/K_1) acts on root tuples by `k_i -> k_i + j`, `e_1 | j`.
    fn orbits(&self) -> Vec<Vec<usize>> {
        let big_e = self.ring().e();
        let mut seen = vec![false; self.algebra.dim];
        let mut orbits = Vec::new();
        for start in 0..self.algebra.dim {
            if seen[start] {
                continue;
            }
            let base = self.algebra.index_to_tuple(start);
            let mut orbit = Vec::new();
            for j in (0..big_e).step_by(self.es[0] as usize) {
                let t: Vec<u32> = base
                    .iter()
                    .zip(&self.algebra.exps)
                    .map(|(&k, &e)| (k + j) % e)
                    .collect();
                let idx = self.algebra.tuple_to_index(&t);
                if !seen[idx] {
                    seen[idx] = true;
                    orbit.push(idx);
                }
            }
            orbits.push(orbit);
        }
        orbits
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentCheck {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentReport {
    pub p: u64,
    /// Ramification indices, reordered so the largest different comes first.
    pub e_list: Vec<u32>,
    /// Ramification index of the splitting base `O_E`.
    pub base_e: u32,
    pub split_components: usize,
    /// Components of `K_1 ⊗ ... ⊗ K_m` itself.
    pub components: usize,
    #[serde(with = "rational::serde_str")]
    pub beta_order: ExactRational,
    /// Denominator valuations of the split idempotents, in order.
    #[serde(serialize_with = "serialize_rationals")]
    pub denominator_valuations: Vec<ExactRational>,
    pub checks: Vec<DescentCheck>,
    pub passed: bool,
}

fn serialize_rationals<S: serde::Serializer>(v: &[ExactRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational::format))
}

/// The split idempotents of the tower over `O_E`, one per root tuple.
pub fn idempotent_set(e_list: &[u32], p: u64) -> Result<(TensorAlgebra, Vec<ScaledElement>)> {
    let tower = Tower::new(e_list, p)?;
    let elems = tower
        .components()?
        .iter()
        .map(|c| ScaledElement {
            coeffs: tower.algebra.expand(&c.numerator),
            shift: tower.shift,
        })
        .collect();
    Ok((tower.algebra, elems))
}

/// Builds the CRT idempotents and checks the descent statement
/// `beta * O_L ⊂ T` together with the algebraic identities behind it.
pub fn verify_descent(e_list: &[u32], p: u64) -> Result<DescentReport> {
    let tower = Tower::new(e_list, p)?;
    let alg = &tower.algebra;
    let r = alg.ring();
    let s = tower.shift;
    let ps = alg.p_pow(s);
    let comps = tower.components()?;
    let expanded: Vec<Vec<RingElement>> = comps.iter().map(|c| alg.expand(&c.numerator)).collect();
    let mut checks = Vec::new();

    let total = expanded.iter().fold(alg.zero(), |acc, g| alg.add(&acc, g));
    checks.push(DescentCheck {
        name: "partition_of_unity",
        passed: total == alg.constant(&ps),
    });

    let mut idempotent = true;
    let mut orthogonal = true;
    let mut eigen = true;
    for (a, ca) in comps.iter().enumerate() {
        for (b, cb) in comps.iter().enumerate().skip(a) {
            let prod: Vec<Vec<RingElement>> = alg
                .exps
                .iter()
                .zip(ca.numerator.iter().zip(&cb.numerator))
                .map(|(&e, (u, v))| alg.uni_mul(u, v, e))
                .collect();
            let full = alg.expand(&prod);
            if a == b {
                idempotent &= full == alg.scale(&expanded[a], &ps);
            } else {
                orthogonal &= alg.is_zero(&full);
            }
        }
        for ((&e, h), alpha) in alg.exps.iter().zip(&ca.numerator).zip(&ca.alphas) {
            let mut x = vec![r.zero(); e as usize];
            x[(1 % e) as usize] = if e == 1 { r.constant(p as i64) } else { r.one() };
            let lhs = alg.uni_mul(&x, h, e);
            let rhs: Vec<RingElement> = h.iter().map(|c| r.mul(c, alpha)).collect();
            eigen &= lhs == rhs;
        }
    }
    checks.push(DescentCheck { name: "idempotent", passed: idempotent });
    checks.push(DescentCheck { name: "orthogonal", passed: orthogonal });
    checks.push(DescentCheck { name: "coordinate_eigenvalues", passed: eigen });

    // beta * g must lie in T: every coefficient divisible by p^shift.
    let beta = tower.beta();
    let mut integral = true;
    for c in &comps {
        let prod: Vec<Vec<RingElement>> = alg
            .exps
            .iter()
            .zip(beta.iter().zip(&c.numerator))
            .map(|(&e, (u, v))| alg.uni_mul(u, v, e))
            .collect();
        integral &= alg.expand(&prod).iter().all(|x| r.div_p_pow(x, s).is_ok());
    }
    checks.push(DescentCheck { name: "beta_times_idempotent_in_T", passed: integral });

    let rebuilt = comps
        .iter()
        .zip(&expanded)
        .fold(alg.zero(), |acc, (c, g)| alg.add(&acc, &alg.scale(g, &tower.beta_at(c))));
    checks.push(DescentCheck {
        name: "beta_reconstruction",
        passed: rebuilt == alg.scale(&alg.expand(&beta), &ps),
    });

    let expected = beta_order(&tower.factor_list()?);
    let mut denominators = Vec::new();
    for g in &expanded {
        let min = g
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| r.valuation(c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min()
            .unwrap_or_else(|| rational::int(s as i64));
        denominators.push(rational::int(s as i64) - min);
    }
    checks.push(DescentCheck {
        name: "denominator_equals_beta_order",
        passed: denominators.iter().all(|d| *d == expected),
    });

    // Orbit sums must have coefficients in O_{K_1} and be idempotents.
    let orbits = tower.orbits();
    let step = r.e() / tower.es[0];
    let mut descends = true;
    let mut orbit_total = alg.zero();
    for orbit in &orbits {
        let g = orbit.iter().fold(alg.zero(), |acc, &i| alg.add(&acc, &expanded[i]));
        descends &= g.iter().all(|c| {
            c.coefficients()
                .iter()
                .enumerate()
                .all(|(j, &x)| x == 0 || j as u32 % step == 0)
        });
        descends &= alg.mul(&g, &g) == alg.scale(&g, &ps);
        orbit_total = alg.add(&orbit_total, &g);
    }
    let split = comps.len();
    let expected_components = (split as u64 * tower.es[0] as u64 / r.e() as u64) as usize;
    checks.push(DescentCheck {
        name: "galois_orbits_descend",
        passed: descends && orbit_total == alg.constant(&ps) && orbits.len() == expected_components,
    });

    debug_assert!(comps.iter().all(|c| c.roots.len() == alg.exps.len()));
    let passed = checks.iter().all(|c| c.passed);
    Ok(DescentReport {
        p,
        e_list: tower.es.clone(),
        base_e: r.e(),
        split_components: split,
        components: orbits.len(),
        beta_order: expected,
        denominator_valuations: denominators,
        checks,
        passed,
    })
}

/// All towers with `e_i` drawn from `choices`, `e_i | p - 1`, up to `m`
/// factors, as sorted multisets.
pub fn kummer_towers(p: u64, choices: &[u32], max_m: usize) -> Vec<Vec<u32>> {
    let allowed: Vec<u32> = choices
        .iter()
        .copied()
        .filter(|&e| (p - 1) % e as u64 == 0)
        .collect();
    let mut out = Vec::new();
    fn rec(allowed: &[u32], from: usize, cur: &mut Vec<u32>, max_m: usize, out: &mut Vec<Vec<u32>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max_m {
            return;
        }
        for i in from..allowed.len() {
            cur.push(allowed[i]);
            rec(allowed, i, cur, max_m, out);
            cur.pop();
        }
    }
    rec(&allowed, 0, &mut Vec::new(), max_m, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::{int, ratio};

    #[test]
    fn trivial_towers() {
        let (alg, g) = idempotent_set(&[1], 5).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].coeffs, alg.constant(&alg.ring().one()));
        let rep = verify_descent(&[1, 1], 5).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.beta_order, int(0));
    }

    #[test]
    fn quadratic_pair_at_five() {
        let (_, g) = idempotent_set(&[2, 2], 5).unwrap();
        assert_eq!(g.len(), 2);
        let rep = verify_descent(&[2, 2], 5).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.components, 2);
        assert!(rep.denominator_valuations.iter().all(|d| *d == ratio(1, 2)));
    }

    #[test]
    fn cubic_pair_at_seven() {
        let rep = verify_descent(&[3, 3], 7).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.split_components, 3);
        assert_eq!(rep.beta_order, ratio(2, 3));
    }

    #[test]
    fn coprime_degrees_give_a_field() {
        let rep = verify_descent(&[2, 3], 7).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.e_list, vec![3, 2]);
        assert_eq!(rep.base_e, 6);
        assert_eq!(rep.split_components, 2);
        assert_eq!(rep.components, 1);
    }

    #[test]
    fn unsupported_and_budget() {
        assert!(matches!(verify_descent(&[4], 7), Err(Error::Unsupported(_))));
        assert!(matches!(
            verify_descent(&[6, 6, 6, 6, 6, 6], 7),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn tower_enumeration() {
        let towers = kummer_towers(7, &[1, 2, 3, 4, 6], 3);
        assert!(towers.iter().all(|t| t.iter().all(|e| 6 % e == 0)));
        assert_eq!(towers.len(), 4 + 10 + 20);
    }

    #[test]
    fn all_small_towers_pass() {
        for p in [5, 7, 13] {
            for es in kummer_towers(p, &[1, 2, 3, 4, 6], 3) {
                let rep = verify_descent(&es, p).unwrap();
                assert!(rep.passed, "{rep:?}");
            }
        }
    }
}
