use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{reduce_mod, reduce_mod_big, valuation_unchecked, Rational, Valuation};
use crate::error::{Error, Result};
use crate::poly::ff::{factor_mod, FqField, PolyFq, PrimeField};
use crate::poly::hensel::{hensel_lift, valuation_mod_factor};
use crate::poly::{certify_irreducible, discriminant, real_roots, resultant, IrreducibilityCertificate, PolyQ, RealAlgebraic};

/// A place of k = ℚ[t]/(P) above an unramified rational prime, given by a
/// monic irreducible factor of P mod p.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlaceAbove {
    pub p: u64,
    /// Monic local factor over 𝔽_p, ascending coefficients.
    pub factor: Vec<u64>,
    pub f: usize,
    pub e: usize,
    /// Position among the places above `p` (factors sorted canonically).
    pub index: usize,
}

impl PlaceAbove {
    pub fn residue_field(&self) -> FqField {
        FqField::new_unchecked(PrimeField::new(self.p).expect("place prime"), self.factor.clone())
    }

    pub fn factor_poly(&self) -> PolyFq<PrimeField> {
        PolyFq::new(PrimeField::new(self.p).expect("place prime"), self.factor.clone())
    }

    pub fn describe(&self, var: &str) -> String {
        let q = PolyQ::new(self.factor.iter().map(|&c| Rational::from_integer(c.into())).collect());
        format!("({})", q.display_var(var))
    }
}

impl fmt::Display for PlaceAbove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.describe("t"), self.p)
    }
}

impl Serialize for PlaceAbove {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PlaceAbove", 4)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("factor", &self.describe("t"))?;
        st.serialize_field("f", &self.f)?;
        st.serialize_field("e", &self.e)?;
        st.end()
    }
}

struct Inner {
    poly: PolyQ,
    disc: Rational,
    denominator: BigInt,
    roots: Vec<RealAlgebraic>,
    certificate: IrreducibilityCertificate,
    places: Mutex<HashMap<u64, Arc<Vec<PlaceAbove>>>>,
    lifts: Mutex<HashMap<(u64, u32), Arc<Vec<Vec<BigInt>>>>>,
}

/// k = ℚ[t]/(P) for a monic irreducible P. Elements are [`PolyQ`]s reduced
/// modulo P; the class of t is written `a`.
#[derive(Clone)]
pub struct NumberFieldAbs(Arc<Inner>);

impl fmt::Debug for NumberFieldAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NumberFieldAbs({})", self.0.poly.display_var("t"))
    }
}

impl PartialEq for NumberFieldAbs {
    fn eq(&self, o: &Self) -> bool {
        self.0.poly == o.0.poly
    }
}
impl Eq for NumberFieldAbs {}

impl NumberFieldAbs {
    /// Certifies irreducibility and caches the discriminant and real roots.
    pub fn new(poly: PolyQ) -> Result<Self> {
        if poly.is_constant() {
            return Err(Error::domain("defining polynomial must have positive degree"));
        }
        if !poly.is_monic() {
            return Err(Error::domain(format!(
                "defining polynomial {} must be monic",
                poly.display_var("t")
            )));
        }
        let certificate = certify_irreducible(&poly)?;
        let disc = discriminant(&poly)?;
        let roots = real_roots(&poly)?;
        let denominator = poly
            .coeffs()
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        Ok(NumberFieldAbs(Arc::new(Inner {
            poly,
            disc,
            denominator,
            roots,
            certificate,
            places: Mutex::new(HashMap::new()),
            lifts: Mutex::new(HashMap::new()),
        })))
    }

    pub fn from_ints(c: &[i64]) -> Result<Self> {
        Self::new(PolyQ::from_ints(c))
    }

    pub fn poly(&self) -> &PolyQ {
        &self.0.poly
    }

    pub fn degree(&self) -> usize {
        self.0.poly.degree()
    }

    pub fn discriminant(&self) -> &Rational {
        &self.0.disc
    }

    pub fn certificate(&self) -> &IrreducibilityCertificate {
        &self.0.certificate
    }

    pub fn real_place_count(&self) -> usize {
        self.0.roots.len()
    }

    /// Isolated real roots of P, ascending; one per real place of k.
    pub fn real_roots(&self) -> Vec<RealAlgebraic> {
        self.0.roots.clone()
    }

    pub fn is_integral(&self) -> bool {
        self.0.denominator.is_one()
    }

    /// A prime is bad when P mod p is not a squarefree polynomial of full
    /// degree: it divides the discriminant or a coefficient denominator.
    pub fn is_bad_prime(&self, p: u64) -> bool {
        let pb = BigInt::from(p);
        (&self.0.denominator % &pb).is_zero() || !valuation_unchecked(&self.0.disc, p).eq(&Valuation::Finite(0))
    }

    /// Primes dividing the discriminant or a coefficient denominator.
    pub fn bad_primes(&self) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        let mut q = self.0.disc.clone();
        q *= Rational::from_integer(self.0.denominator.clone());
        let f = crate::arith::factor(&q)?;
        for (p, _) in f.factors {
            out.push(p.to_u64().ok_or_else(|| Error::domain("bad prime exceeds 64 bits"))?);
        }
        for (p, _) in crate::arith::factor_integer(&self.0.denominator)? {
            out.push(p.to_u64().ok_or_else(|| Error::domain("bad prime exceeds 64 bits"))?);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn reduce_poly_mod(&self, p: u64) -> PolyFq<PrimeField> {
        let k = PrimeField::new(p).expect("prime");
        PolyFq::new(
            k,
            self.0.poly.coeffs().iter().map(|c| reduce_mod(c, p).expect("p-integral")).collect(),
        )
    }

    /// One place per irreducible factor of P mod p, all with e = 1.
    pub fn places_above(&self, p: u64) -> Result<Arc<Vec<PlaceAbove>>> {
        PrimeField::new(p)?;
        if self.is_bad_prime(p) {
            return Err(Error::RamifiedPrime(p));
        }
        if let Some(hit) = self.0.places.lock().unwrap().get(&p) {
            return Ok(hit.clone());
        }
        let fac = factor_mod(&self.reduce_poly_mod(p))?;
        let places: Vec<PlaceAbove> = fac
            .into_iter()
            .enumerate()
            .map(|(index, (g, m))| {
                debug_assert_eq!(m, 1);
                PlaceAbove {
                    p,
                    f: g.degree(),
                    factor: g.coeffs,
                    e: 1,
                    index,
                }
            })
            .collect();
        let places = Arc::new(places);
        self.0.places.lock().unwrap().insert(p, places.clone());
        Ok(places)
    }

    pub fn splits_completely(&self, p: u64) -> Result<bool> {
        Ok(self.places_above(p)?.iter().all(|w| w.f == 1))
    }

    /// The place `w | p` with `w(t0 − a) > 0`, if any. Such a place is unique
    /// because P mod p is squarefree, and it has residue degree 1.
    pub fn positive_valuation_place(&self, t0: &Rational, p: u64) -> Result<Option<PlaceAbove>> {
        if self.is_bad_prime(p) {
            return Err(Error::NeedsSInclusion {
                prime: p,
                reason: "prime is ramified or divides the index of the order".into(),
            });
        }
        let Some(t) = reduce_mod(t0, p) else {
            return Err(Error::NeedsSInclusion {
                prime: p,
                reason: format!("t0 = {t0} is not {p}-integral"),
            });
        };
        let places = self.places_above(p)?;
        Ok(places
            .iter()
            .find(|w| w.f == 1 && (w.factor[0] + t) % p == 0)
            .cloned())
    }

    /// `w(t0 − a)` at the place found by [`positive_valuation_place`]; equals
    /// `v_p(P(t0))` since that place is the only one with positive valuation.
    pub fn linear_valuation(&self, t0: &Rational, p: u64) -> Valuation {
        valuation_unchecked(&self.0.poly.eval(t0), p)
    }

    pub fn gen(&self) -> PolyQ {
        self.reduce(&PolyQ::x())
    }

    pub fn reduce(&self, c: &PolyQ) -> PolyQ {
        c.rem(&self.0.poly)
    }

    pub fn mul(&self, x: &PolyQ, y: &PolyQ) -> PolyQ {
        self.reduce(&(x * y))
    }

    pub fn inv(&self, x: &PolyQ) -> Result<PolyQ> {
        if x.is_zero() {
            return Err(Error::domain("inverse of zero in a number field"));
        }
        let (g, s, _) = x.ext_gcd(&self.0.poly);
        if !g.is_constant() {
            return Err(Error::Internal("non-unit in a field: P is reducible".into()));
        }
        Ok(self.reduce(&s))
    }

    pub fn div(&self, x: &PolyQ, y: &PolyQ) -> Result<PolyQ> {
        Ok(self.mul(x, &self.inv(y)?))
    }

    /// `N_{k/ℚ}(c) = Res(P, c)` for monic P.
    pub fn norm(&self, c: &PolyQ) -> Rational {
        if self.degree() == 1 {
            // k = ℚ: the element is its own norm.
            return self.reduce(c).coeff(0);
        }
        resultant(&self.0.poly, &self.reduce(c))
    }

    /// `P` reduced to integer residues mod `p^k`.
    fn poly_mod_pk(&self, p: u64, k: u32) -> Vec<BigInt> {
        let m = crate::arith::pow_big(&BigInt::from(p), k);
        self.0
            .poly
            .coeffs()
            .iter()
            .map(|c| reduce_mod_big(c, &m).expect("p-integral"))
            .collect()
    }

    fn lifted_factors(&self, p: u64, k: u32) -> Result<Arc<Vec<Vec<BigInt>>>> {
        if let Some(hit) = self.0.lifts.lock().unwrap().get(&(p, k)) {
            return Ok(hit.clone());
        }
        let places = self.places_above(p)?;
        let factors: Vec<PolyFq<PrimeField>> = places.iter().map(|w| w.factor_poly()).collect();
        let lifted = Arc::new(hensel_lift(&self.poly_mod_pk(p, k), &factors, k));
        self.0.lifts.lock().unwrap().insert((p, k), lifted.clone());
        Ok(lifted)
    }

    /// `w(c)` at a place above an unramified prime, via the p-adic factor of P
    /// lifted far enough that the answer is exact.
    pub fn valuation_at(&self, c: &PolyQ, w: &PlaceAbove) -> Result<Valuation> {
        let c = self.reduce(c);
        if c.is_zero() {
            return Ok(Valuation::Infinite);
        }
        if self.is_bad_prime(w.p) {
            return Err(Error::RamifiedPrime(w.p));
        }
        if self.degree() == 1 {
            return Ok(valuation_unchecked(&c.coeff(0), w.p));
        }
        let (ints, den) = c.integer_multiple();
        let shift = crate::arith::int_valuation(&den, w.p) as i64;
        let n = self.norm(&PolyQ::from_bigints(&ints));
        let bound = valuation_unchecked(&n, w.p).finite().unwrap_or(0).max(0) as u32 + 1;
        let lifted = self.lifted_factors(w.p, bound)?;
        let v = valuation_mod_factor(&ints, &lifted[w.index], w.p, bound)
            .ok_or_else(|| Error::Internal("valuation exceeded the norm bound".into()))?;
        Ok(Valuation::Finite(v.finite().unwrap() - shift))
    }

    /// Primes below a place where `c` is not a unit. Candidates are the primes
    /// of `N(c)` and of the common denominator of `c`; bad primes among them
    /// are included without a valuation check.
    pub fn non_unit_primes(&self, c: &PolyQ) -> Result<Vec<u64>> {
        let c = self.reduce(c);
        if c.is_zero() {
            return Err(Error::domain("zero is not a unit anywhere"));
        }
        let (_, den) = c.integer_multiple();
        let mut cands: Vec<u64> = Vec::new();
        for (p, _) in crate::arith::factor(&self.norm(&c))?.factors {
            cands.push(p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?);
        }
        for (p, _) in crate::arith::factor_integer(&den)? {
            cands.push(p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?);
        }
        cands.sort_unstable();
        cands.dedup();
        let mut out = Vec::new();
        for p in cands {
            if self.is_bad_prime(p) {
                out.push(p);
                continue;
            }
            for w in self.places_above(p)?.iter() {
                if self.valuation_at(&c, w)? != Valuation::Finite(0) {
                    out.push(p);
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Signs of `c` at the real places, in the order of [`real_roots`](Self::real_roots).
    pub fn real_signs(&self, c: &PolyQ) -> Vec<i8> {
        let c = self.reduce(c);
        self.real_roots().iter_mut().map(|r| r.sign_of(&c)).collect()
    }

    /// Reduction of an element to the residue field at `w`; `None` when the
    /// element is not integral there in the ℤ[a] presentation.
    pub fn reduce_at(&self, c: &PolyQ, w: &PlaceAbove) -> Option<Vec<u64>> {
        let field = w.residue_field();
        let u = field.gen();
        let mut acc = crate::poly::FiniteField::zero(&field);
        for coef in self.reduce(c).coeffs().iter().rev() {
            let r = reduce_mod(coef, w.p)?;
            acc = crate::poly::FiniteField::add(
                &field,
                &crate::poly::FiniteField::mul(&field, &acc, &u),
                &crate::poly::FiniteField::from_u64(&field, r),
            );
        }
        Some(acc)
    }

    /// `t − a` as an element.
    pub fn t_minus_a(&self, t: &Rational) -> PolyQ {
        self.reduce(&PolyQ::new(vec![t.clone(), -Rational::one()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use proptest::prelude::*;

    fn gauss() -> NumberFieldAbs {
        NumberFieldAbs::from_ints(&[1, 0, 1]).unwrap()
    }

    fn cube2() -> NumberFieldAbs {
        NumberFieldAbs::from_ints(&[-2, 0, 0, 1]).unwrap()
    }

    #[test]
    fn places_examples() {
        let k = gauss();
        let w5 = k.places_above(5).unwrap();
        assert_eq!(w5.len(), 2);
        assert!(w5.iter().all(|w| w.f == 1 && w.e == 1));
        let w3 = k.places_above(3).unwrap();
        assert_eq!((w3.len(), w3[0].f), (1, 2));
        assert!(matches!(k.places_above(2), Err(Error::RamifiedPrime(2))));
        // 2 is a cube mod 31 since 2^10 ≡ 1; brute force the cube roots.
        let roots: Vec<u64> = (0..31).filter(|x| (x * x * x) % 31 == 2).collect();
        assert_eq!(roots.len(), 3);
        let w31 = cube2().places_above(31).unwrap();
        assert_eq!(w31.len(), 3);
        assert!(w31.iter().all(|w| w.f == 1));
    }

    #[test]
    fn non_unit_primes_are_exact() {
        let q = NumberFieldAbs::from_ints(&[0, 1]).unwrap();
        assert_eq!(q.non_unit_primes(&PolyQ::constant(crate::arith::rat(12, 5))).unwrap(), vec![2, 3, 5]);
        let k = NumberFieldAbs::from_ints(&[1, 0, 1]).unwrap();
        // (2 + i)/(2 − i) has norm 1 but valuations ±1 above 5.
        let x = k.div(&PolyQ::from_ints(&[2, 1]), &PolyQ::from_ints(&[2, -1])).unwrap();
        assert_eq!(k.non_unit_primes(&x).unwrap(), vec![5]);
        // (3 + 4i)/5: the denominator cancels in the norm.
        let y = k.mul(&PolyQ::from_ints(&[3, 4]), &PolyQ::constant(crate::arith::rat(1, 5)));
        assert_eq!(k.non_unit_primes(&y).unwrap(), vec![5]);
        assert!(k.non_unit_primes(&PolyQ::from_ints(&[0, 1])).unwrap().is_empty());
    }

    #[test]
    fn splitting_examples() {
        assert!(gauss().splits_completely(13).unwrap());
        assert!(!gauss().splits_completely(7).unwrap());
        let roots: Vec<u64> = (0..5).filter(|x| (x * x * x) % 5 == 2).collect();
        assert_eq!(roots, vec![3]);
        assert!(!cube2().splits_completely(5).unwrap());
    }

    #[test]
    fn positive_valuation_examples() {
        let k = NumberFieldAbs::from_ints(&[-2, 0, 1]).unwrap();
        let w = k.positive_valuation_place(&rat(3, 1), 7).unwrap().unwrap();
        assert_eq!(w.factor, vec![4, 1]); // t − 3 ≡ t + 4
        let g = gauss();
        let w = g.positive_valuation_place(&rat(2, 1), 5).unwrap().unwrap();
        assert_eq!(w.factor, vec![3, 1]); // t − 2
        assert!(g.positive_valuation_place(&rat(1, 1), 5).unwrap().is_none());
        assert!(matches!(
            g.positive_valuation_place(&rat(1, 5), 5),
            Err(Error::NeedsSInclusion { prime: 5, .. })
        ));
    }

    #[test]
    fn valuations_in_gaussian_integers() {
        let k = gauss();
        let places = k.places_above(5).unwrap();
        // 2 + i: valuation 1 at exactly one place above 5.
        let c = PolyQ::from_ints(&[2, 1]);
        let mut v: Vec<i64> = places.iter().map(|w| k.valuation_at(&c, w).unwrap().finite().unwrap()).collect();
        v.sort();
        assert_eq!(v, vec![0, 1]);
        // (2 + i)³ / 5
        let c3 = k.mul(&k.mul(&c, &c), &c).scale(&rat(1, 5));
        let mut v: Vec<i64> = places.iter().map(|w| k.valuation_at(&c3, w).unwrap().finite().unwrap()).collect();
        v.sort();
        assert_eq!(v, vec![-1, 2]);
        let w3 = &k.places_above(3).unwrap()[0];
        assert_eq!(k.valuation_at(&PolyQ::from_ints(&[9]), w3).unwrap(), Valuation::Finite(2));
    }

    #[test]
    fn norms() {
        let k = gauss();
        assert_eq!(k.norm(&PolyQ::from_ints(&[7, 1])), rat(50, 1));
        let c = cube2();
        assert_eq!(c.norm(&PolyQ::from_ints(&[0, 1])), rat(2, 1));
        let x = PolyQ::from_ints(&[1, 1, 3]);
        let inv = c.inv(&x).unwrap();
        assert_eq!(c.mul(&x, &inv), PolyQ::one());
    }

    proptest! {
        #[test]
        fn sum_of_residue_degrees_is_degree(pi in 0usize..168, fi in 0usize..5) {
            let p = crate::arith::primes_up_to(1000)[pi];
            let polys: [&[i64]; 5] = [&[1, 0, 1], &[-2, 0, 1], &[-2, 0, 0, 1], &[-1, -1, 0, 1], &[1, 0, 0, 0, 1]];
            let k = NumberFieldAbs::from_ints(polys[fi]).unwrap();
            prop_assume!(!k.is_bad_prime(p));
            let places = k.places_above(p).unwrap();
            prop_assert_eq!(places.iter().map(|w| w.e * w.f).sum::<usize>(), k.degree());
            let roots = (0..p).filter(|&x| {
                let v = k.poly().eval(&rat(x as i64, 1));
                reduce_mod(&v, p) == Some(0)
            }).count();
            prop_assert_eq!(k.splits_completely(p).unwrap(), roots == k.degree());
        }

        #[test]
        fn valuation_is_additive_at_places(a in -30i64..30, b in -30i64..30, c in -30i64..30, d in -30i64..30) {
            prop_assume!((a, b) != (0, 0) && (c, d) != (0, 0));
            let k = cube2();
            let x = PolyQ::from_ints(&[a, b, 1]);
            let y = PolyQ::from_ints(&[c, d]);
            for p in [5u64, 31, 43] {
                for w in k.places_above(p).unwrap().iter() {
                    let vx = k.valuation_at(&x, w).unwrap().finite().unwrap();
                    let vy = k.valuation_at(&y, w).unwrap().finite().unwrap();
                    let vxy = k.valuation_at(&k.mul(&x, &y), w).unwrap().finite().unwrap();
                    prop_assert_eq!(vxy, vx + vy);
                }
                // Σ f_w·w(x) = v_p(N(x)).
                let total: i64 = k.places_above(p).unwrap().iter()
                    .map(|w| w.f as i64 * k.valuation_at(&x, w).unwrap().finite().unwrap()).sum();
                prop_assert_eq!(Valuation::Finite(total), valuation_unchecked(&k.norm(&x), p));
            }
        }
    }
}
