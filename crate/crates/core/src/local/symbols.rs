//! Places of ℚ, quadratic Hilbert symbols, their product formula, and
//! unramified invariants of cyclic algebras given by Dirichlet characters.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::factor::{is_prime_u64, pow_mod};
use crate::arith::{factor, primes_up_to, reduce_mod, reduce_mod_big, sign_of, valuation_unchecked, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaceOfQ {
    Real,
    Finite(u64),
}

impl PlaceOfQ {
    pub fn finite(p: u64) -> Result<Self> {
        if is_prime_u64(p) {
            Ok(PlaceOfQ::Finite(p))
        } else {
            Err(Error::domain(format!("{p} is not prime")))
        }
    }

    pub fn prime(self) -> Option<u64> {
        match self {
            PlaceOfQ::Real => None,
            PlaceOfQ::Finite(p) => Some(p),
        }
    }
}

impl fmt::Display for PlaceOfQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaceOfQ::Real => write!(f, "real"),
            PlaceOfQ::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PlaceOfQ {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "real" | "inf" | "∞" => Ok(PlaceOfQ::Real),
            t => {
                let p: u64 = t.parse().map_err(|_| Error::domain(format!("bad place `{t}`")))?;
                PlaceOfQ::finite(p)
            }
        }
    }
}

impl Serialize for PlaceOfQ {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// An element of ℚ/ℤ, kept in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QmodZ(Rational);

impl QmodZ {
    pub fn new(q: Rational) -> Self {
        QmodZ(&q - q.floor())
    }

    pub fn frac(n: i64, d: i64) -> Self {
        QmodZ::new(Rational::new(n.into(), d.into()))
    }

    pub fn zero() -> Self {
        QmodZ(Rational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

impl Add for QmodZ {
    type Output = QmodZ;
    fn add(self, o: QmodZ) -> QmodZ {
        QmodZ::new(self.0 + o.0)
    }
}

impl Neg for QmodZ {
    type Output = QmodZ;
    fn neg(self) -> QmodZ {
        QmodZ::new(-self.0)
    }
}

impl Mul<i64> for QmodZ {
    type Output = QmodZ;
    fn mul(self, k: i64) -> QmodZ {
        QmodZ::new(self.0 * Rational::from_integer(k.into()))
    }
}

impl fmt::Display for QmodZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for QmodZ {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn legendre(a: u64, p: u64) -> i8 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Splits `q = p^α u` with `u` a p-adic unit.
fn split_unit(q: &Rational, p: u64) -> (i64, Rational) {
    let a = valuation_unchecked(q, p).finite().expect("nonzero");
    let pp = Rational::from_integer(p.into());
    (a, q / crate::arith::pow_rat(&pp, a))
}

/// `(a, b)_v`: +1 iff `z² = a x² + b y²` has a nontrivial solution over ℚ_v.
pub fn hilbert_symbol(a: &Rational, b: &Rational, v: PlaceOfQ) -> Result<i8> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::domain("Hilbert symbol of zero"));
    }
    match v {
        PlaceOfQ::Real => Ok(if sign_of(a) < 0 && sign_of(b) < 0 { -1 } else { 1 }),
        PlaceOfQ::Finite(2) => {
            let (al, u) = split_unit(a, 2);
            let (be, w) = split_unit(b, 2);
            let m8 = BigInt::from(8);
            let u = reduce_mod_big(&u, &m8).unwrap().to_u64().unwrap();
            let w = reduce_mod_big(&w, &m8).unwrap().to_u64().unwrap();
            let eps = |x: u64| ((x - 1) / 2) % 2;
            let omega = |x: u64| ((x * x - 1) / 8) % 2;
            let e = eps(u) * eps(w) + (al.rem_euclid(2) as u64) * omega(w) + (be.rem_euclid(2) as u64) * omega(u);
            Ok(if e % 2 == 0 { 1 } else { -1 })
        }
        PlaceOfQ::Finite(p) => {
            let (al, u) = split_unit(a, p);
            let (be, w) = split_unit(b, p);
            let mut s: i8 = 1;
            if al.rem_euclid(2) == 1 && be.rem_euclid(2) == 1 && p % 4 == 3 {
                s = -s;
            }
            if be.rem_euclid(2) == 1 {
                s *= legendre(reduce_mod(&u, p).unwrap(), p);
            }
            if al.rem_euclid(2) == 1 {
                s *= legendre(reduce_mod(&w, p).unwrap(), p);
            }
            Ok(s)
        }
    }
}

/// Places where `(a, b)_v` can be −1: the real place and primes dividing `2ab`.
pub fn relevant_places(a: &Rational, b: &Rational) -> Result<Vec<PlaceOfQ>> {
    let mut ps: Vec<u64> = vec![2];
    for q in [a, b] {
        for (p, _) in factor(q)?.factors {
            ps.push(p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?);
        }
    }
    ps.sort_unstable();
    ps.dedup();
    let mut out = vec![PlaceOfQ::Real];
    out.extend(ps.into_iter().map(PlaceOfQ::Finite));
    Ok(out)
}

/// Sum over all places of the invariants of the quaternion algebra `(a, b)`,
/// each −1 symbol contributing 1/2.
pub fn reciprocity_defect(a: &Rational, b: &Rational) -> Result<QmodZ> {
    let mut acc = QmodZ::zero();
    for v in relevant_places(a, b)? {
        if hilbert_symbol(a, b, v)? == -1 {
            acc = acc + QmodZ::frac(1, 2);
        }
    }
    Ok(acc)
}

/// A character of `(ℤ/m)^*` with values in `(1/n)ℤ/ℤ`, stored as numerators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DirichletCharacter {
    modulus: u64,
    order: u64,
    table: BTreeMap<u64, u64>,
}

fn units(m: u64) -> Vec<u64> {
    if m == 1 {
        return vec![0];
    }
    (1..m).filter(|&x| x.gcd(&m) == 1).collect()
}

impl DirichletCharacter {
    /// Validates multiplicativity and that the image is all of `(1/n)ℤ/ℤ`.
    pub fn from_table(modulus: u64, order: u64, table: BTreeMap<u64, u64>) -> Result<Self> {
        if modulus == 0 || order == 0 {
            return Err(Error::domain("modulus and order must be positive"));
        }
        let us = units(modulus);
        for u in &us {
            match table.get(u) {
                Some(&k) if k < order => {}
                _ => return Err(Error::domain(format!("character table missing or out of range at {u}"))),
            }
        }
        if table.len() != us.len() {
            return Err(Error::domain("character table has entries outside (ℤ/m)^*"));
        }
        if table[&(1 % modulus)] != 0 {
            return Err(Error::domain("character is nonzero on the trivial class"));
        }
        let gens: Vec<u64> = primes_up_to(modulus).into_iter().filter(|p| modulus % p != 0).collect();
        for &x in &us {
            for &g in &gens {
                let xy = x * g % modulus;
                if (table[&x] + table[&g]) % order != table[&xy] {
                    return Err(Error::domain(format!("character is not multiplicative at {x}·{g}")));
                }
            }
        }
        let g = table.values().fold(order, |acc, &k| acc.gcd(&k));
        if g != 1 {
            return Err(Error::domain(format!("character values do not have order {order}")));
        }
        Ok(DirichletCharacter { modulus, order, table })
    }

    /// The character with `χ(g) = k/n` for a generator `g` of a cyclic `(ℤ/m)^*`.
    pub fn from_generator(modulus: u64, order: u64, generator: u64, k: u64) -> Result<Self> {
        let us = units(modulus);
        let mut table = BTreeMap::new();
        let mut x = 1 % modulus;
        for e in 0..us.len() as u64 {
            if table.insert(x, (e * k) % order).is_some() {
                return Err(Error::domain(format!("{generator} does not generate (ℤ/{modulus})^*")));
            }
            x = x * generator % modulus;
        }
        Self::from_table(modulus, order, table)
    }

    /// The quadratic character of ℚ(√d) (Kronecker symbol of the discriminant).
    pub fn quadratic(d: i64) -> Result<Self> {
        let disc = fundamental_discriminant(d)?;
        let m = disc.unsigned_abs();
        let table = units(m)
            .into_iter()
            .map(|n| (n, if kronecker(disc, n) == 1 { 0 } else { 1 }))
            .collect();
        Self::from_table(m, 2, table)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// `χ(x mod m)`; `None` when `gcd(x, m) > 1`.
    pub fn value(&self, x: &BigInt) -> Option<QmodZ> {
        let r = x.mod_floor(&BigInt::from(self.modulus)).to_u64().unwrap();
        self.table
            .get(&r)
            .map(|&k| QmodZ::frac(k as i64, self.order as i64))
    }
}

/// Discriminant of ℚ(√d) for squarefree-part computation on small `d`.
pub fn fundamental_discriminant(d: i64) -> Result<i64> {
    if d == 0 {
        return Err(Error::domain("zero has no quadratic field"));
    }
    let mut core = d.signum();
    for (p, e) in crate::arith::factor::factor_u64(d.unsigned_abs()) {
        if e % 2 == 1 {
            core *= p as i64;
        }
    }
    if core == 1 {
        return Err(Error::domain(format!("{d} is a square")));
    }
    Ok(if core.rem_euclid(4) == 1 { core } else { 4 * core })
}

/// Kronecker symbol `(d/n)` for `n > 0`.
pub fn kronecker(d: i64, n: u64) -> i8 {
    let mut n = n;
    let mut s: i8 = 1;
    while n % 2 == 0 {
        n /= 2;
        if d % 2 == 0 {
            return 0;
        }
        if matches!(d.rem_euclid(8), 3 | 5) {
            s = -s;
        }
    }
    if n == 1 {
        return s;
    }
    // Jacobi symbol (d/n) for odd n.
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(m % 8, 3 | 5) {
                s = -s;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            s = -s;
        }
        a %= m;
    }
    if m == 1 {
        s
    } else {
        0
    }
}

/// `v_p(a) · χ(p)`: the local invariant at an unramified prime of the cyclic
/// algebra attached to `χ` and `a`.
pub fn cyclic_invariant(chi: &DirichletCharacter, a: &Rational, p: u64) -> Result<QmodZ> {
    if a.is_zero() {
        return Err(Error::domain("invariant of zero"));
    }
    if !is_prime_u64(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    if chi.modulus % p == 0 {
        return Err(Error::RamifiedPrime(p));
    }
    let v = valuation_unchecked(a, p).finite().unwrap();
    Ok(chi.value(&BigInt::from(p)).expect("p is a unit mod m") * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use proptest::prelude::*;

    /// Solvability of `z² = a x² + b y²` (a, b integers with total valuation
    /// at most 1 at p) by scanning primitive solutions modulo p³, or 2⁶ at 2;
    /// such solutions lift by Hensel's lemma.
    fn hilbert_oracle(a: i64, b: i64, p: u64) -> i8 {
        let p = p as i64;
        let m = if p == 2 { 64 } else { p * p * p };
        let mut unit_sq = vec![false; m as usize];
        let mut any_sq = vec![false; m as usize];
        for z in 0..m {
            let s = (z * z % m) as usize;
            any_sq[s] = true;
            if z % p != 0 {
                unit_sq[s] = true;
            }
        }
        for x in 0..m {
            for y in 0..m {
                let rhs = (a * x * x + b * y * y).rem_euclid(m) as usize;
                let ok = if x % p != 0 || y % p != 0 { any_sq[rhs] } else { unit_sq[rhs] };
                if ok {
                    return 1;
                }
            }
        }
        -1
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(hilbert_symbol(&rat_int(-1), &rat_int(-1), PlaceOfQ::Real).unwrap(), -1);
        assert_eq!(hilbert_symbol(&rat_int(-1), &rat_int(-1), PlaceOfQ::Finite(2)).unwrap(), -1);
        assert_eq!(hilbert_symbol(&rat_int(2), &rat_int(7), PlaceOfQ::Finite(7)).unwrap(), 1);
        assert!(hilbert_symbol(&rat_int(0), &rat_int(7), PlaceOfQ::Finite(7)).is_err());
    }

    #[test]
    fn mod8_scan_for_minus_one_minus_one() {
        // z² + x² + y² ≡ 0 mod 8 has no solution with an odd entry.
        let mut found = false;
        for x in 0..8i64 {
            for y in 0..8i64 {
                for z in 0..8i64 {
                    if (x * x + y * y + z * z) % 8 == 0 && (x % 2 == 1 || y % 2 == 1 || z % 2 == 1) {
                        found = true;
                    }
                }
            }
        }
        assert!(!found);
    }

    #[test]
    fn symbols_match_scan_oracle() {
        for a in [-6i64, -3, -2, -1, 1, 2, 3, 5, 6, 10, 12] {
            for b in [-5i64, -1, 2, 3, 7, 15] {
                for p in [2u64, 3, 5, 7] {
                    if crate::arith::int_valuation(&BigInt::from(a), p) + crate::arith::int_valuation(&BigInt::from(b), p) > 1 {
                        continue;
                    }
                    let got = hilbert_symbol(&rat_int(a), &rat_int(b), PlaceOfQ::Finite(p)).unwrap();
                    assert_eq!(got, hilbert_oracle(a, b, p), "({a},{b})_{p}");
                }
            }
        }
    }

    #[test]
    fn reciprocity_examples() {
        for (a, b) in [(-1, -1), (3, 5), (-7, 30)] {
            assert!(reciprocity_defect(&rat_int(a), &rat_int(b)).unwrap().is_zero());
        }
        // Independent tally for (−7, 30): symbols at real, 2, 3, 5, 7.
        let places = relevant_places(&rat_int(-7), &rat_int(30)).unwrap();
        assert_eq!(places.len(), 5);
        let minus: usize = places
            .iter()
            .filter(|&&v| hilbert_symbol(&rat_int(-7), &rat_int(30), v).unwrap() == -1)
            .count();
        assert_eq!(minus % 2, 0);
    }

    #[test]
    fn cyclic_examples() {
        let chi4 = DirichletCharacter::quadratic(-1).unwrap();
        assert_eq!(chi4.modulus(), 4);
        assert_eq!(cyclic_invariant(&chi4, &rat_int(3), 3).unwrap(), QmodZ::frac(1, 2));
        assert_eq!(cyclic_invariant(&chi4, &rat_int(5), 5).unwrap(), QmodZ::zero());
        assert_eq!(cyclic_invariant(&chi4, &rat_int(2), 2), Err(Error::RamifiedPrime(2)));
        let chi7 = DirichletCharacter::from_generator(7, 3, 3, 1).unwrap();
        // Discrete-log oracle: 3 has order 6 mod 7.
        let order = (1..=6).find(|&e| 3u64.pow(e) % 7 == 1).unwrap();
        assert_eq!(order, 6);
        assert_eq!(cyclic_invariant(&chi7, &rat_int(3), 3).unwrap(), QmodZ::frac(1, 3));
        assert_eq!(chi7.value(&BigInt::from(2)).unwrap(), QmodZ::frac(2, 3));
    }

    #[test]
    fn rejects_bad_tables() {
        let mut t = BTreeMap::new();
        t.insert(1, 0);
        t.insert(2, 1);
        t.insert(3, 0);
        t.insert(4, 1);
        assert!(DirichletCharacter::from_table(5, 2, t).is_err());
        assert!(DirichletCharacter::from_generator(8, 2, 3, 1).is_err());
    }

    #[test]
    fn kronecker_matches_legendre() {
        for p in [3u64, 5, 7, 11, 13] {
            for a in 1..p {
                assert_eq!(kronecker(a as i64, p), legendre(a, p));
            }
        }
    }

    fn arb_rat() -> impl Strategy<Value = Rational> {
        (-200i64..200, 1i64..50)
            .prop_filter("nonzero", |(n, _)| *n != 0)
            .prop_map(|(n, d)| rat(n, d))
    }

    fn arb_place() -> impl Strategy<Value = PlaceOfQ> {
        prop_oneof![
            Just(PlaceOfQ::Real),
            prop::sample::select(vec![2u64, 3, 5, 7, 11, 13]).prop_map(PlaceOfQ::Finite)
        ]
    }

    proptest! {
        #[test]
        fn symbol_laws(a in arb_rat(), b in arb_rat(), c in arb_rat(), v in arb_place()) {
            let h = |x: &Rational, y: &Rational| hilbert_symbol(x, y, v).unwrap();
            prop_assert_eq!(h(&a, &b), h(&b, &a));
            prop_assert_eq!(h(&a, &(&b * &c)), h(&a, &b) * h(&a, &c));
            prop_assert_eq!(h(&a, &-a.clone()), 1);
            let one_minus = Rational::from_integer(1.into()) - &a;
            if !one_minus.is_zero() {
                prop_assert_eq!(h(&a, &one_minus), 1);
            }
        }

        #[test]
        fn product_formula(a in arb_rat(), b in arb_rat()) {
            prop_assert!(reciprocity_defect(&a, &b).unwrap().is_zero());
        }
    }
}
