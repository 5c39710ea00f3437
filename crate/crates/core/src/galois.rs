//! Frobenius cycle types, the almost-abelian classifier, the quadratic
//! resolvent of a non-cyclic cubic and completely split primes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;
use serde::Serialize;

use crate::arith::{primes_up_to, reduce_mod, Rational};
use crate::error::{Error, Result};
use crate::field::NumberFieldAbs;
use crate::poly::ff::factor_degrees;
use crate::poly::irreducible::is_irreducible;
use crate::poly::{discriminant, PolyFq, PolyQ, PrimeField};

/// A multiset of factor degrees, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CycleType(pub Vec<usize>);

impl CycleType {
    pub fn new(mut parts: Vec<usize>) -> Self {
        parts.sort_unstable();
        CycleType(parts)
    }

    pub fn fixed_points(&self) -> usize {
        self.0.iter().filter(|&&d| d == 1).count()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    /// Permutations of 𝔽_p induced by `x ↦ ax + b`: the identity, a p-cycle,
    /// or one fixed point with the rest in cycles of a common length.
    pub fn is_affine_shape(&self, p: usize) -> bool {
        let n: usize = self.0.iter().sum();
        if n != p {
            return false;
        }
        if self.0.iter().all(|&d| d == 1) || self.0 == [p] {
            return true;
        }
        self.fixed_points() == 1 && CycleType(self.0[1..].to_vec()).is_homogeneous()
    }

    /// At least two fixed points with a nontrivial cycle: impossible for an
    /// affine map of 𝔽_p, which fixes 0, 1 or all points.
    pub fn violates_fixed_point_bound(&self) -> bool {
        self.fixed_points() >= 2 && self.0.iter().any(|&d| d > 1)
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TypeRecord {
    pub count: u64,
    pub first_prime: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CycleTypeProfile {
    pub degree: usize,
    pub prime_bound: u64,
    #[serde(serialize_with = "serialize_types")]
    pub types: BTreeMap<CycleType, TypeRecord>,
    pub primes_scanned: u64,
    pub primes_skipped: Vec<u64>,
}

fn serialize_types<S: serde::Serializer>(m: &BTreeMap<CycleType, TypeRecord>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_string(), v)?;
    }
    map.end()
}

impl CycleTypeProfile {
    pub fn all_homogeneous(&self) -> bool {
        self.types.keys().all(CycleType::is_homogeneous)
    }

    fn record(&mut self, p: u64, t: CycleType) {
        self.primes_scanned += 1;
        let e = self.types.entry(t).or_insert(TypeRecord { count: 0, first_prime: p });
        e.count += 1;
        e.first_prime = e.first_prime.min(p);
    }
}

fn integer_monic(f: &PolyQ) -> Result<()> {
    if f.is_zero() || !f.is_monic() || !f.is_integral() {
        return Err(Error::domain("expected a monic polynomial with integer coefficients"));
    }
    Ok(())
}

fn reduce(f: &PolyQ, p: u64) -> PolyFq<PrimeField> {
    let k = PrimeField::new(p).expect("prime");
    PolyFq::new(k, f.coeffs().iter().map(|c| reduce_mod(c, p).expect("integral")).collect())
}

/// Factor degrees of `f mod p`, or `None` when `f mod p` is not squarefree.
pub fn cycle_type_at(f: &PolyQ, p: u64) -> Result<Option<CycleType>> {
    let fp = reduce(f, p);
    if !fp.is_squarefree() {
        return Ok(None);
    }
    Ok(Some(CycleType::new(factor_degrees(&fp)?)))
}

const CHUNK: usize = 64;

/// Aggregates the factor-degree multiset of `f mod p` over primes `p ≤ bound`
/// where `f mod p` is squarefree; the others are listed as skipped.
pub fn cycle_type_scan(f: &PolyQ, prime_bound: u64) -> Result<CycleTypeProfile> {
    integer_monic(f)?;
    let primes = primes_up_to(prime_bound);
    let chunks: Vec<&[u64]> = primes.chunks(CHUNK).collect();
    let parts = crate::par::map_collect(&chunks, |chunk| -> Result<Vec<(u64, Option<CycleType>)>> {
        chunk.iter().map(|&p| Ok((p, cycle_type_at(f, p)?))).collect()
    });
    let mut profile = CycleTypeProfile {
        degree: f.degree(),
        prime_bound,
        ..Default::default()
    };
    for part in parts {
        for (p, t) in part? {
            match t {
                Some(t) => profile.record(p, t),
                None => profile.primes_skipped.push(p),
            }
        }
    }
    Ok(profile)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "value", rename_all = "snake_case")]
pub enum AlmostAbelianValue {
    /// Every observed Frobenius type is homogeneous (degree ≤ 2 always).
    Abelian,
    AffineCompatible,
    /// Prime degree with a cycle type no affine map of 𝔽_p can have.
    Rejected { prime: u64, cycle_type: CycleType },
    /// Composite degree with a non-homogeneous type: neither abelian nor of
    /// prime degree, so the affine case does not apply.
    OutsideDefinition { prime: u64, cycle_type: CycleType },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlmostAbelianVerdict {
    #[serde(flatten)]
    pub value: AlmostAbelianValue,
    /// Whether every observed type is homogeneous.
    pub homogeneous: bool,
    pub evidence: CycleTypeProfile,
}

impl AlmostAbelianVerdict {
    pub fn is_rejected(&self) -> bool {
        matches!(self.value, AlmostAbelianValue::Rejected { .. })
    }
}

fn is_prime_usize(n: usize) -> bool {
    crate::arith::is_prime_u64(n as u64)
}

/// Classifies the extension defined by `f` from its Frobenius cycle types up
/// to `prime_bound`. Rejection is a proof; acceptance is evidence.
pub fn almost_abelian_test(f: &PolyQ, prime_bound: u64) -> Result<AlmostAbelianVerdict> {
    integer_monic(f)?;
    if !is_irreducible(f)? {
        return Err(Error::domain("polynomial is reducible"));
    }
    let evidence = cycle_type_scan(f, prime_bound)?;
    let homogeneous = evidence.all_homogeneous();
    let n = f.degree();
    let first = |pred: &dyn Fn(&CycleType) -> bool| {
        evidence
            .types
            .iter()
            .filter(|(t, _)| pred(t))
            .map(|(t, r)| (r.first_prime, t.clone()))
            .min()
    };
    let value = if n <= 2 {
        AlmostAbelianValue::Abelian
    } else if n == 3 {
        AlmostAbelianValue::AffineCompatible
    } else if is_prime_usize(n) {
        if let Some((prime, cycle_type)) = first(&|t: &CycleType| t.violates_fixed_point_bound()) {
            AlmostAbelianValue::Rejected { prime, cycle_type }
        } else if homogeneous {
            AlmostAbelianValue::Abelian
        } else if evidence.types.keys().all(|t| t.is_affine_shape(n)) {
            AlmostAbelianValue::AffineCompatible
        } else {
            AlmostAbelianValue::Inconclusive
        }
    } else if homogeneous {
        AlmostAbelianValue::Abelian
    } else {
        let (prime, cycle_type) = first(&|t: &CycleType| !t.is_homogeneous()).expect("non-homogeneous type");
        AlmostAbelianValue::OutsideDefinition { prime, cycle_type }
    };
    Ok(AlmostAbelianVerdict {
        value,
        homogeneous,
        evidence,
    })
}

/// Refactors `f` at the witness prime and confirms the recorded type.
pub fn reverify_rejection(f: &PolyQ, verdict: &AlmostAbelianVerdict) -> Result<bool> {
    match &verdict.value {
        AlmostAbelianValue::Rejected { prime, cycle_type } => {
            Ok(cycle_type.violates_fixed_point_bound() && cycle_type_at(f, *prime)?.as_ref() == Some(cycle_type))
        }
        _ => Ok(false),
    }
}

/// `x² − disc(f)` for an irreducible cubic with non-square discriminant: it
/// defines the quadratic subfield of the splitting field.
pub fn cyclic_resolvent_cubic(f: &PolyQ) -> Result<PolyQ> {
    if f.degree() != 3 || !f.is_monic() {
        return Err(Error::domain("expected a monic cubic"));
    }
    if !is_irreducible(f)? {
        return Err(Error::domain("cubic is reducible"));
    }
    let d = discriminant(f)?;
    if is_rational_square(&d) {
        return Err(Error::Precondition(format!(
            "discriminant {d} is a square: the cubic extension is already cyclic"
        )));
    }
    Ok(PolyQ::new(vec![-d, Rational::from_integer(0.into()), Rational::from_integer(1.into())]))
}

fn is_rational_square(q: &Rational) -> bool {
    if q.is_negative() {
        return false;
    }
    let n = q.numer();
    let d = q.denom();
    let rn = n.sqrt();
    let rd = d.sqrt();
    &(&rn * &rn) == n && &(&rd * &rd) == d
}

/// The smallest prime `≤ bound`, outside `exclude` and good for every field,
/// that splits completely in all of them.
pub fn find_split_prime(fields: &[NumberFieldAbs], exclude: &BTreeSet<u64>, bound: u64) -> Result<u64> {
    if fields.is_empty() {
        return Err(Error::domain("at least one field is required"));
    }
    for p in primes_up_to(bound) {
        if exclude.contains(&p) || fields.iter().any(|k| k.is_bad_prime(p)) {
            continue;
        }
        let mut ok = true;
        for k in fields {
            if !k.splits_completely(p)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(p);
        }
    }
    Err(Error::NotFound(bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ct(v: &[usize]) -> CycleType {
        CycleType::new(v.to_vec())
    }

    #[test]
    fn quadratic_scan() {
        let prof = cycle_type_scan(&PolyQ::from_ints(&[1, 0, 1]), 20).unwrap();
        assert_eq!(prof.types[&ct(&[1, 1])].count, 3);
        assert_eq!(prof.types[&ct(&[2])].count, 4);
        assert_eq!(prof.primes_skipped, vec![2]);
        // Oracle: −1 is a square mod p iff some x has x² ≡ −1.
        for p in primes_up_to(20).into_iter().skip(1) {
            let split = (0..p).any(|x| (x * x + 1) % p == 0);
            let t = cycle_type_at(&PolyQ::from_ints(&[1, 0, 1]), p).unwrap().unwrap();
            assert_eq!(split, t == ct(&[1, 1]));
        }
    }

    #[test]
    fn cubic_and_linear_scan() {
        let prof = cycle_type_scan(&PolyQ::from_ints(&[-2, 0, 0, 1]), 7).unwrap();
        assert_eq!(prof.types[&ct(&[1, 2])].first_prime, 5);
        // Oracle: exactly one cube root of 2 mod 5.
        assert_eq!((0..5u64).filter(|x| (x * x * x) % 5 == 2).count(), 1);
        let lin = cycle_type_scan(&PolyQ::from_ints(&[3, 1]), 50).unwrap();
        assert_eq!(lin.types.len(), 1);
        assert!(lin.types.contains_key(&ct(&[1])));
        assert!(cycle_type_scan(&PolyQ::new(vec![Rational::new(1.into(), 2.into()), Rational::from_integer(1.into())]), 10).is_err());
    }

    #[test]
    fn affine_shapes() {
        assert!(ct(&[1, 2, 2]).is_affine_shape(5));
        assert!(ct(&[1, 4]).is_affine_shape(5));
        assert!(ct(&[5]).is_affine_shape(5));
        assert!(!ct(&[2, 3]).is_affine_shape(5));
        assert!(!ct(&[1, 1, 3]).is_affine_shape(5));
        assert!(ct(&[1, 1, 3]).violates_fixed_point_bound());
        assert!(!ct(&[1, 2, 2]).violates_fixed_point_bound());
        // Oracle: cycle types of all maps x ↦ ax + b on 𝔽_7.
        let p = 7usize;
        for a in 1..p {
            for b in 0..p {
                let mut seen = vec![false; p];
                let mut parts = Vec::new();
                for x in 0..p {
                    if seen[x] {
                        continue;
                    }
                    let mut len = 0;
                    let mut y = x;
                    while !seen[y] {
                        seen[y] = true;
                        y = (a * y + b) % p;
                        len += 1;
                    }
                    parts.push(len);
                }
                let t = CycleType::new(parts);
                assert!(t.is_affine_shape(p), "{t}");
                assert!(!t.violates_fixed_point_bound());
            }
        }
    }

    #[test]
    fn classifier_examples() {
        let cubic = almost_abelian_test(&PolyQ::from_ints(&[-1, -1, 0, 1]), 200).unwrap();
        assert_eq!(cubic.value, AlmostAbelianValue::AffineCompatible);
        let radical = almost_abelian_test(&PolyQ::from_ints(&[-2, 0, 0, 0, 0, 1]), 500).unwrap();
        assert_eq!(radical.value, AlmostAbelianValue::AffineCompatible);
        let s5 = PolyQ::from_ints(&[-1, -1, 0, 0, 0, 1]);
        let v = almost_abelian_test(&s5, 200).unwrap();
        let AlmostAbelianValue::Rejected { prime, ref cycle_type } = v.value else {
            panic!("{:?}", v.value)
        };
        assert!(prime <= 200);
        assert_eq!(cycle_type, &ct(&[1, 1, 3]));
        assert!(reverify_rejection(&s5, &v).unwrap());
        // ℚ(ζ5): cyclic of degree 4.
        let cyc = almost_abelian_test(&PolyQ::from_ints(&[1, 1, 1, 1, 1]), 300).unwrap();
        assert_eq!(cyc.value, AlmostAbelianValue::Abelian);
        // x⁴ − 2 has dihedral Galois group, so some type is {1,1,2}.
        let d4 = almost_abelian_test(&PolyQ::from_ints(&[-2, 0, 0, 0, 1]), 300).unwrap();
        assert!(matches!(d4.value, AlmostAbelianValue::OutsideDefinition { .. }));
        assert!(almost_abelian_test(&PolyQ::from_ints(&[-1, 0, 1]), 10).is_err());
    }

    #[test]
    fn resolvents() {
        assert_eq!(cyclic_resolvent_cubic(&PolyQ::from_ints(&[-1, -1, 0, 1])).unwrap(), PolyQ::from_ints(&[23, 0, 1]));
        assert_eq!(cyclic_resolvent_cubic(&PolyQ::from_ints(&[-2, 0, 0, 1])).unwrap(), PolyQ::from_ints(&[108, 0, 1]));
        assert!(matches!(
            cyclic_resolvent_cubic(&PolyQ::from_ints(&[-1, -3, 0, 1])),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn split_primes() {
        let gauss = NumberFieldAbs::from_ints(&[1, 0, 1]).unwrap();
        let two = BTreeSet::from([2]);
        assert_eq!(find_split_prime(&[gauss.clone()], &two, 100).unwrap(), 5);
        let cube = NumberFieldAbs::from_ints(&[-2, 0, 0, 1]).unwrap();
        // Oracle: first prime with three cube roots of 2.
        let oracle = primes_up_to(100)
            .into_iter()
            .find(|&p| p > 3 && (0..p).filter(|x| (x * x * x) % p == 2 % p).count() == 3)
            .unwrap();
        assert_eq!(oracle, 31);
        assert_eq!(find_split_prime(&[cube], &BTreeSet::new(), 100).unwrap(), oracle);
        let sqrt2 = NumberFieldAbs::from_ints(&[-2, 0, 1]).unwrap();
        let oracle = primes_up_to(100).into_iter().find(|p| p % 8 == 1).unwrap();
        assert_eq!(find_split_prime(&[gauss, sqrt2], &two, 100).unwrap(), oracle);
        assert!(matches!(
            find_split_prime(&[NumberFieldAbs::from_ints(&[1, 0, 1]).unwrap()], &two, 4),
            Err(Error::NotFound(4))
        ));
    }
}
