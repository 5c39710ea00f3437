use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use splitval_core::approx::{w_fiber_verify, FiberVerdict};
use splitval_core::arith::{crt_solve, rat, Congruence, CongruenceSystem};
use splitval_core::field::{DegreeOneVerdict, NumberFieldAbs, RelativeExtension};
use splitval_core::galois::find_split_prime;
use splitval_core::local::PlaceOfQ;
use splitval_core::poly::PolyQ;
use splitval_core::sieve::{hh1_search, Hh1Bounds, Hh1Problem, HomogeneousForm};
use splitval_core::split::{check_condition2, extend_places, ConjectureInstance};
use splitval_core::text::parse_instance;
use splitval_core::Rational;

const TWO_ENTRIES: &str = "entry: P=t-3; g=x^2-2; b=3\nentry: P=t+1; g=x^2+1; b=2\nS: real, 2, 3\n";

fn instance() -> ConjectureInstance {
    parse_instance(TWO_ENTRIES).unwrap()
}

fn v_p(n: &BigInt, p: u64) -> u32 {
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut k = 0;
    while !n.is_zero() && (&n % &p).is_zero() {
        n /= &p;
        k += 1;
    }
    k
}

fn numerator_primes(x: &Rational, skip: &BTreeSet<u64>) -> Vec<u64> {
    let mut n = x.numer().abs();
    let mut out = Vec::new();
    let mut p = 2u64;
    while BigInt::from(p * p) <= n {
        let bp = BigInt::from(p);
        if (&n % &bp).is_zero() {
            out.push(p);
            while (&n % &bp).is_zero() {
                n /= &bp;
            }
        }
        p += 1;
    }
    if n > BigInt::from(1) {
        out.push(u64::try_from(n).unwrap());
    }
    out.retain(|p| !skip.contains(p));
    out
}

fn trial_is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extend_keeps_condition2_for_units(num in -400i64..400, den in 1i64..40) {
        let inst = instance();
        let t0 = rat(num, den);
        let added = [7u64, 13];
        for e in inst.entries() {
            let v = e.p().eval(&t0);
            prop_assume!(!v.is_zero());
            for &p in &added {
                prop_assume!(v_p(v.numer(), p) == 0 && v_p(v.denom(), p) == 0);
            }
        }
        let ext = extend_places(&inst, &added).unwrap();
        let before = check_condition2(&inst, &t0).unwrap();
        let after = check_condition2(&ext, &t0).unwrap();
        prop_assert_eq!(before.pass(), after.pass());
        prop_assert_eq!(before.failed(), after.failed());
    }

    #[test]
    fn condition2_pass_agrees_with_fiber(num in -2000i64..2000, den in 1i64..6) {
        let inst = instance();
        let t0 = rat(num, den);
        prop_assume!(inst.entries().iter().all(|e| !e.p().eval(&t0).is_zero()));
        let c2 = check_condition2(&inst, &t0).unwrap();
        prop_assume!(c2.pass());
        let s: BTreeSet<u64> = inst.s().iter().filter_map(|v| match v {
            PlaceOfQ::Finite(p) => Some(*p),
            PlaceOfQ::Real => None,
        }).collect();
        for e in inst.entries() {
            for p in numerator_primes(&e.p().eval(&t0), &s) {
                let fv = w_fiber_verify(&inst, &t0, &[PlaceOfQ::Finite(p)]).unwrap();
                prop_assert_ne!(fv[0].verdict, FiberVerdict::No, "t0 = {} at {}", t0, p);
            }
        }
    }

    #[test]
    fn positive_valuation_place_matches_valuation(num in -3000i64..3000, pi in 0usize..12) {
        let k = NumberFieldAbs::new(PolyQ::from_ints(&[1, 0, 1])).unwrap();
        let p = [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41][pi];
        let t0 = rat(num, 1);
        let w = k.positive_valuation_place(&t0, p).unwrap();
        let value = num * num + 1;
        prop_assert_eq!(w.is_some(), value % p as i64 == 0);
        if let Some(w) = w {
            let t = num.rem_euclid(p as i64) as u64;
            let at: u64 = w.factor.iter().rev().fold(0, |acc, &c| (acc * t + c) % p);
            prop_assert_eq!(at, 0);
        }
    }

    #[test]
    fn linear_relative_extension_always_has_a_degree_one_place(c in -20i64..20, pi in 0usize..6) {
        let k = NumberFieldAbs::new(PolyQ::from_ints(&[-2, 0, 1])).unwrap();
        let ext = RelativeExtension::new(k.clone(), vec![PolyQ::from_ints(&[c, 1]), PolyQ::one()]).unwrap();
        let p = [7u64, 17, 23, 31, 41, 47][pi];
        for w in k.places_above(p).unwrap().iter() {
            prop_assert_eq!(ext.has_degree_one_place_over(w), DegreeOneVerdict::Yes);
        }
    }

    #[test]
    fn split_prime_splits_everywhere(a in prop::sample::select(vec![-1i64, 2, -2, 3, -3, 5, -5, 6, 7, -7]),
                                     b in prop::sample::select(vec![-1i64, 2, -2, 3, -3, 5, -5, 6, 7, -7])) {
        prop_assume!(a != b);
        let fields = [
            NumberFieldAbs::new(PolyQ::from_ints(&[-a, 0, 1])).unwrap(),
            NumberFieldAbs::new(PolyQ::from_ints(&[-b, 0, 1])).unwrap(),
        ];
        let p = find_split_prime(&fields, &BTreeSet::new(), 10_000).unwrap();
        prop_assert!(trial_is_prime(p));
        for k in &fields {
            prop_assert!(k.splits_completely(p).unwrap());
        }
        // Independently: both a and b are nonzero squares mod p.
        for d in [a, b] {
            let r = d.rem_euclid(p as i64) as u64;
            prop_assert!(r != 0 && (1..p).any(|x| x * x % p == r));
        }
    }

    #[test]
    fn crt_solutions_differ_by_the_modulus(r1 in 0i64..100, r2 in 0i64..100, shift in -5i64..5) {
        let sys = CongruenceSystem {
            congruences: vec![
                Congruence::new(BigInt::from(r1), BigInt::from(8)).unwrap(),
                Congruence::new(BigInt::from(r2), BigInt::from(45)).unwrap(),
            ],
        };
        let (x, m) = crt_solve(&sys).unwrap();
        prop_assert_eq!(&m, &BigInt::from(360));
        let other = &x + &m * shift;
        prop_assert!(sys.congruences.iter().all(|c| c.holds(&other)));
        // Every solution in a window is congruent to x.
        for y in -360i64..360 {
            let y = BigInt::from(y);
            if sys.congruences.iter().all(|c| c.holds(&y)) {
                prop_assert!((&y - &x).mod_floor(&m).is_zero());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hh1_counts_do_not_depend_on_segmenting(segment in 1usize..40, c in prop::sample::select(vec![1i64, 2, 3, 5])) {
        let form = HomogeneousForm::from_ints(&[c, 0, 1]).unwrap();
        let prob = Hh1Problem::new(vec![form], [2u64, 3], vec![]).unwrap();
        let base = hh1_search(&prob, &Hh1Bounds::new(8, 120)).unwrap();
        let mut bounds = Hh1Bounds::new(8, 120);
        bounds.segment = segment;
        let seg = hh1_search(&prob, &bounds).unwrap();
        prop_assert_eq!(serde_json::to_string(&seg.hits).unwrap(), serde_json::to_string(&base.hits).unwrap());
        let mut a = serde_json::to_value(&seg.stats).unwrap();
        let mut b = serde_json::to_value(&base.stats).unwrap();
        a["segments"].take();
        b["segments"].take();
        prop_assert_eq!(a, b);
    }
}
