//! The instance tuple: entries (P_i, L_i, b_i), the place set S and the
//! local targets t_v.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;
use serde::Serialize;

use crate::arith::{valuation_unchecked, Rational};
use crate::error::{Error, Result};
use crate::field::{NumberFieldAbs, RelativeExtension};
use crate::local::{PlaceOfQ, Precision};
use crate::poly::PolyQ;

/// One triple `(P_i, L_i, b_i)`; `a_i` is the class of `t` in `k_i = ℚ[t]/(P_i)`.
#[derive(Clone, Debug)]
pub struct Entry {
    pub ext: RelativeExtension,
    pub b: PolyQ,
}

impl Entry {
    pub fn new(p: PolyQ, g: Vec<PolyQ>, b: PolyQ) -> Result<Self> {
        let k = NumberFieldAbs::new(p)?;
        Self::over(k, g, b)
    }

    pub fn over(k: NumberFieldAbs, g: Vec<PolyQ>, b: PolyQ) -> Result<Self> {
        let b = k.reduce(&b);
        if b.is_zero() {
            return Err(Error::domain("b must be nonzero in k"));
        }
        let ext = RelativeExtension::new(k, g)?;
        Ok(Entry { ext, b })
    }

    pub fn field(&self) -> &NumberFieldAbs {
        self.ext.base()
    }

    pub fn p(&self) -> &PolyQ {
        self.ext.base().poly()
    }

    /// `P_i(t0)`, which equals `N_{k_i/ℚ}(t0 − a_i)`.
    pub fn value_at(&self, t0: &Rational) -> Rational {
        self.p().eval(t0)
    }

    /// Primes where this entry forces membership in S, with the reason.
    pub fn required_primes(&self) -> Result<BTreeMap<u64, String>> {
        let mut out = BTreeMap::new();
        let k = self.field();
        for p in k.bad_primes()? {
            out.entry(p).or_insert_with(|| "divides the discriminant or index of P".to_string());
        }
        for p in self.ext.ramified_primes()? {
            out.entry(p).or_insert_with(|| "possibly ramified in L/k".to_string());
        }
        for p in k.non_unit_primes(&self.b)? {
            out.entry(p).or_insert_with(|| "b is not a unit above it".to_string());
        }
        Ok(out)
    }
}

/// `t_v` at a place of S together with the precision that "close to t_v" means.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalTarget {
    pub place: PlaceOfQ,
    #[serde(serialize_with = "crate::ser::display")]
    pub t: Rational,
    #[serde(skip)]
    pub precision: Precision,
}

impl LocalTarget {
    pub fn finite(p: u64, t: Rational, n: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::domain(format!("precision N at {p} must be positive")));
        }
        Ok(LocalTarget {
            place: PlaceOfQ::finite(p)?,
            t,
            precision: Precision::Adic(n),
        })
    }

    pub fn real(t: Rational, eps: Rational) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::domain("precision ε at the real place must be positive"));
        }
        Ok(LocalTarget {
            place: PlaceOfQ::Real,
            t,
            precision: Precision::Real(eps),
        })
    }

    pub fn adic_precision(&self) -> Option<i64> {
        match self.precision {
            Precision::Adic(n) => Some(n),
            _ => None,
        }
    }

    pub fn eps(&self) -> Option<&Rational> {
        match &self.precision {
            Precision::Real(e) => Some(e),
            _ => None,
        }
    }

    /// Whether `t0` is within the target's precision of `t_v`.
    pub fn is_close(&self, t0: &Rational) -> bool {
        match (&self.precision, self.place) {
            (Precision::Adic(n), PlaceOfQ::Finite(p)) => valuation_unchecked(&(t0 - &self.t), p).at_least(*n),
            (Precision::Real(e), PlaceOfQ::Real) => (t0 - &self.t).abs() <= *e,
            _ => false,
        }
    }

    /// True when the precision of `o` is implied by this one at the same place.
    fn implies(&self, o: &LocalTarget) -> bool {
        match (&self.precision, &o.precision) {
            (Precision::Adic(n), Precision::Adic(m)) => n >= m && o.is_close(&self.t),
            (Precision::Real(e), Precision::Real(f)) => (&self.t - &o.t).abs() + e <= *f,
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match (&self.precision, self.place) {
            (Precision::Adic(n), PlaceOfQ::Finite(p)) => format!("v={p} t={} N={n}", self.t),
            (Precision::Real(e), _) => format!("real t={} eps={e}", self.t),
            _ => format!("{} t={}", self.place, self.t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConjectureInstance {
    entries: Vec<Entry>,
    s: BTreeSet<PlaceOfQ>,
    targets: BTreeMap<PlaceOfQ, LocalTarget>,
    added: BTreeMap<u64, String>,
}

impl ConjectureInstance {
    /// Builds an instance, enlarging S by the real place and every prime the
    /// entries require (bad primes of k_i, primes where some b_i is not a
    /// unit, primes possibly ramified in some L_i). Target places join S.
    pub fn new(
        entries: Vec<Entry>,
        s: impl IntoIterator<Item = PlaceOfQ>,
        targets: impl IntoIterator<Item = LocalTarget>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("an instance needs at least one entry"));
        }
        for i in 0..entries.len() {
            for j in 0..i {
                if entries[i].p() == entries[j].p() {
                    return Err(Error::domain(format!("entries {j} and {i} have the same polynomial P")));
                }
            }
        }
        let mut s: BTreeSet<PlaceOfQ> = s.into_iter().collect();
        s.insert(PlaceOfQ::Real);
        let mut map: BTreeMap<PlaceOfQ, LocalTarget> = BTreeMap::new();
        for t in targets {
            match map.get(&t.place) {
                None => {
                    map.insert(t.place, t);
                }
                Some(old) if old.implies(&t) => {}
                Some(old) if t.implies(old) => {
                    map.insert(t.place, t);
                }
                Some(old) => {
                    return Err(Error::InfeasibleAtPrecision(format!(
                        "conflicting targets at {}: {} and {}",
                        t.place,
                        old.describe(),
                        t.describe()
                    )))
                }
            }
        }
        s.extend(map.keys().copied());
        let mut added = BTreeMap::new();
        for e in &entries {
            for (p, why) in e.required_primes()? {
                if s.insert(PlaceOfQ::Finite(p)) {
                    added.insert(p, why);
                }
            }
        }
        Ok(ConjectureInstance {
            entries,
            s,
            targets: map,
            added,
        })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn s(&self) -> &BTreeSet<PlaceOfQ> {
        &self.s
    }

    pub fn s_primes(&self) -> Vec<u64> {
        self.s.iter().filter_map(|v| v.prime()).collect()
    }

    pub fn in_s(&self, p: u64) -> bool {
        self.s.contains(&PlaceOfQ::Finite(p))
    }

    pub fn targets(&self) -> &BTreeMap<PlaceOfQ, LocalTarget> {
        &self.targets
    }

    pub fn target(&self, v: PlaceOfQ) -> Option<&LocalTarget> {
        self.targets.get(&v)
    }

    /// Primes the constructor added to S, with reasons.
    pub fn added_primes(&self) -> &BTreeMap<u64, String> {
        &self.added
    }

    /// `∏ [L_i : k_i]`.
    pub fn relative_degree_product(&self) -> u64 {
        self.entries.iter().map(|e| e.ext.degree() as u64).product()
    }

    /// Same entries and S (plus `extra`) with a replacement target list.
    pub fn with_targets(&self, targets: Vec<LocalTarget>, extra: impl IntoIterator<Item = PlaceOfQ>) -> Result<Self> {
        let s: Vec<PlaceOfQ> = self.s.iter().copied().chain(extra).collect();
        ConjectureInstance::new(self.entries.clone(), s, targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    pub(crate) fn gaussian_entry() -> Entry {
        Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap()
    }

    #[test]
    fn denominators_of_b_join_s() {
        let e = Entry::new(PolyQ::from_ints(&[-14, 1]), vec![PolyQ::from_ints(&[-3]), PolyQ::zero(), PolyQ::one()], PolyQ::constant(rat(12, 5))).unwrap();
        let inst = ConjectureInstance::new(vec![e], [], []).unwrap();
        assert!(inst.in_s(5));
        assert!(inst.added_primes().get(&5).is_some_and(|why| why.contains("b is not a unit")));
    }

    #[test]
    fn constructor_enlarges_s() {
        let inst = ConjectureInstance::new(vec![gaussian_entry()], [], []).unwrap();
        assert!(inst.s().contains(&PlaceOfQ::Real));
        assert!(inst.in_s(2));
        assert_eq!(inst.s().len(), 2);
        // b = 6 forces 2 and 3.
        let e = Entry::new(PolyQ::from_ints(&[-1, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::from_ints(&[6]))
            .unwrap();
        let inst = ConjectureInstance::new(vec![e], [], []).unwrap();
        assert_eq!(inst.s_primes(), vec![2, 3]);
        assert!(inst.added_primes().contains_key(&3));
        // P = t² − 2 with g = x² − a: 2 is bad for P.
        let e = Entry::new(
            PolyQ::from_ints(&[-2, 0, 1]),
            vec![PolyQ::from_ints(&[0, -1]), PolyQ::zero(), PolyQ::one()],
            PolyQ::one(),
        )
        .unwrap();
        let inst = ConjectureInstance::new(vec![e], [], []).unwrap();
        assert_eq!(inst.s_primes(), vec![2]);
    }

    #[test]
    fn targets_merge_or_conflict() {
        let t1 = LocalTarget::finite(3, rat_int(1), 2).unwrap();
        let t2 = LocalTarget::finite(3, rat_int(10), 1).unwrap();
        let inst = ConjectureInstance::new(vec![gaussian_entry()], [], [t1.clone(), t2]).unwrap();
        assert_eq!(inst.target(PlaceOfQ::Finite(3)), Some(&t1));
        assert!(inst.in_s(3));
        let t3 = LocalTarget::finite(3, rat_int(2), 1).unwrap();
        assert!(matches!(
            ConjectureInstance::new(vec![gaussian_entry()], [], [t1, t3]),
            Err(Error::InfeasibleAtPrecision(_))
        ));
        assert!(LocalTarget::finite(3, rat_int(1), 0).is_err());
        assert!(LocalTarget::real(rat_int(1), rat(-1, 2)).is_err());
    }

    #[test]
    fn rejects_duplicates_and_zero_b() {
        assert!(ConjectureInstance::new(vec![gaussian_entry(), gaussian_entry()], [], []).is_err());
        assert!(Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::from_ints(&[0, 1])).is_err());
    }
}
