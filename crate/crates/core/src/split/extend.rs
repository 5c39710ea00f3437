//! Enlarging S by primes where every entry has good reduction.

use num_bigint::BigInt;

use super::check::verify_hypotheses;
use super::instance::{ConjectureInstance, LocalTarget};
use crate::arith::{pow_rat, Rational};
use crate::error::{Error, Result};
use crate::local::{NormVerdict, PlaceOfQ};

const MAX_MULTIPLE: i64 = 16;

/// Adds each prime to S with target `p^{−N·∏[L_i:k_i]}` at precision 1, for
/// the smallest `N ≥ 1` that makes every hypothesis at `p` an IsNorm.
/// Primes the caller already put in S are left alone; primes S had to
/// contain because some entry ramifies or is non-integral there are rejected.
pub fn extend_places(inst: &ConjectureInstance, primes: &[u64]) -> Result<ConjectureInstance> {
    let d = inst.relative_degree_product() as i64;
    let mut out = inst.clone();
    for &p in primes {
        PlaceOfQ::finite(p)?;
        if out.added_primes().contains_key(&p) {
            return Err(Error::RamifiedPrime(p));
        }
        if out.in_s(p) {
            continue;
        }
        let v = PlaceOfQ::Finite(p);
        let mut done = None;
        for n in 1..=MAX_MULTIPLE {
            let t = pow_rat(&Rational::from_integer(BigInt::from(p)), -n * d);
            let mut targets: Vec<LocalTarget> = out.targets().values().cloned().collect();
            targets.push(LocalTarget::finite(p, t, 1)?);
            let cand = out.with_targets(targets, [v])?;
            let ok = verify_hypotheses(&cand)?
                .iter()
                .filter(|h| h.place == v)
                .all(|h| h.verdict == NormVerdict::IsNorm);
            if ok {
                done = Some(cand);
                break;
            }
        }
        out = done.ok_or_else(|| {
            Error::Internal(format!("no valuation multiple of {d} gives local norms at {p}"))
        })?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use crate::poly::PolyQ;
    use crate::split::check::check_condition2;
    use crate::split::instance::Entry;

    fn gaussian() -> ConjectureInstance {
        let e = Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap();
        ConjectureInstance::new(vec![e], [], [LocalTarget::finite(2, rat_int(1), 3).unwrap()]).unwrap()
    }

    #[test]
    fn adds_five_with_valuation_minus_two() {
        let ext = extend_places(&gaussian(), &[5]).unwrap();
        let t = ext.target(PlaceOfQ::Finite(5)).unwrap();
        assert_eq!(t.t, rat(1, 25));
        assert_eq!(t.adic_precision(), Some(1));
        assert!(ext.in_s(5));
    }

    #[test]
    fn existing_and_ramified_primes() {
        let inst = gaussian();
        let same = extend_places(&inst, &[2]).unwrap();
        assert_eq!(same.s(), inst.s());
        assert_eq!(same.targets(), inst.targets());
        let e = Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::from_ints(&[-3]), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap();
        let inst = ConjectureInstance::new(vec![e], [], []).unwrap();
        assert!(matches!(extend_places(&inst, &[3]), Err(Error::RamifiedPrime(3))));
        assert!(extend_places(&inst, &[7]).is_ok());
        let e = Entry::new(PolyQ::from_ints(&[-2, 0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap();
        let inst = ConjectureInstance::new(vec![e], [], []).unwrap();
        assert!(extend_places(&inst, &[4]).is_err());
    }

    #[test]
    fn condition2_preserved_for_units_at_added_primes() {
        let inst = gaussian();
        let ext = extend_places(&inst, &[5, 13]).unwrap();
        for t0 in [9i64, 17, 21, 33, 45, 49, 57, 63, 81, 77, 99] {
            let t0 = rat_int(t0);
            if [5, 13].iter().any(|&p| crate::arith::valuation_unchecked(&t0, p) != crate::arith::Valuation::Finite(0)) {
                continue;
            }
            let a = check_condition2(&inst, &t0).unwrap().pass();
            let b = check_condition2(&ext, &t0).unwrap().pass();
            assert_eq!(a, b, "t0 = {t0}");
        }
    }
}
