//! Witness search for t0 = λ/μ in increasing height.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::check::{
    check_condition1, check_condition2, check_t0, overall_status, verify_hypotheses_asserting, Assertions,
    ConditionReport,
};
use super::instance::ConjectureInstance;
use crate::arith::crt::{crt_solve, Congruence, CongruenceSystem};
use crate::arith::{pow_big, valuation_unchecked, Rational};
use crate::error::{Error, Result};
use crate::local::{NormVerdict, PlaceOfQ, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorPolicy {
    /// μ = 1 only.
    IntegersOnly,
    /// μ = 1 and every product of primes of S up to the height bound.
    SUnits,
}

#[derive(Clone, Debug)]
pub struct SearchParams {
    pub height_bound: u64,
    pub denominators: DenominatorPolicy,
    /// Stop after the first height block containing this many witnesses.
    pub max_hits: Option<usize>,
    pub asserted: Assertions,
}

impl SearchParams {
    pub fn new(height_bound: u64) -> Self {
        SearchParams {
            height_bound,
            denominators: DenominatorPolicy::SUnits,
            max_hits: None,
            asserted: Assertions::new(),
        }
    }

    pub fn first(height_bound: u64) -> Self {
        SearchParams {
            max_hits: Some(1),
            ..Self::new(height_bound)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub candidates: u64,
    pub condition1_failures: u64,
    pub condition2_failures: u64,
    pub conditional: u64,
    /// For each prime, the number of candidates it caused to fail.
    pub failures_by_prime: BTreeMap<u64, u64>,
    /// Candidates rejected because a prime outside S would need to join S.
    pub needs_s_inclusion: BTreeMap<u64, u64>,
    pub highest_height: u64,
}

impl SearchStats {
    fn merge(&mut self, o: &SearchStats) {
        self.candidates += o.candidates;
        self.condition1_failures += o.condition1_failures;
        self.condition2_failures += o.condition2_failures;
        self.conditional += o.conditional;
        for (p, n) in &o.failures_by_prime {
            *self.failures_by_prime.entry(*p).or_default() += n;
        }
        for (p, n) in &o.needs_s_inclusion {
            *self.needs_s_inclusion.entry(*p).or_default() += n;
        }
        self.highest_height = self.highest_height.max(o.highest_height);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub hits: Vec<ConditionReport>,
    pub stats: SearchStats,
}

/// The residue class of λ forced by the finite targets for a given μ, or
/// `None` when no λ works with this μ.
fn lambda_class(inst: &ConjectureInstance, mu: u64) -> Result<Option<(BigInt, BigInt)>> {
    let mut sys = CongruenceSystem::new();
    let mu_q = Rational::from_integer(mu.into());
    for t in inst.targets().values() {
        let (PlaceOfQ::Finite(p), Precision::Adic(n)) = (t.place, &t.precision) else {
            continue;
        };
        let c = &mu_q * &t.t;
        let m = n + valuation_unchecked(&mu_q, p).finite().unwrap();
        let vc = valuation_unchecked(&c, p);
        if m <= 0 {
            if !vc.at_least(m) {
                return Ok(None);
            }
            continue;
        }
        if !vc.at_least(0) {
            return Ok(None);
        }
        let modulus = pow_big(&BigInt::from(p), m as u32);
        let r = crate::arith::reduce_mod_big(&c, &modulus).expect("p-integral");
        sys.push(Congruence::new(r, modulus)?);
    }
    Ok(Some(crt_solve(&sys)?))
}

fn denominators(inst: &ConjectureInstance, policy: DenominatorPolicy, bound: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    if policy == DenominatorPolicy::SUnits {
        for p in inst.s_primes() {
            let mut next = Vec::new();
            for &m in &out {
                let mut x = m;
                while let Some(y) = x.checked_mul(p).filter(|&y| y <= bound) {
                    next.push(y);
                    x = y;
                }
            }
            out.extend(next);
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    height: u64,
    abs_lambda: u64,
    negative: bool,
    mu: u64,
}

impl Candidate {
    fn t0(&self) -> Rational {
        let l = BigInt::from(self.abs_lambda);
        Rational::new(if self.negative { -l } else { l }, BigInt::from(self.mu))
    }
}

/// λ in `[lo, hi]` with `λ ≡ r (mod m)`.
fn progression(r: &BigInt, m: &BigInt, lo: i128, hi: i128) -> Vec<i128> {
    if lo > hi {
        return Vec::new();
    }
    let m = m.to_i128().unwrap_or(i128::MAX);
    let r = r.to_i128().unwrap_or(0);
    let mut x = lo + (r - lo).rem_euclid(m);
    let mut out = Vec::new();
    while x <= hi {
        out.push(x);
        match x.checked_add(m) {
            Some(y) => x = y,
            None => break,
        }
    }
    out
}

struct Plan {
    mus: Vec<(u64, BigInt, BigInt)>,
    real: Option<(Rational, Rational)>,
}

impl Plan {
    /// Candidates with height in `[h0, h1]`, in canonical order.
    fn block(&self, h0: u64, h1: u64) -> Vec<Candidate> {
        let mut out = Vec::new();
        for (mu, r, m) in &self.mus {
            if *mu > h1 {
                break;
            }
            let mut ranges: Vec<(i128, i128)> = Vec::new();
            let h1i = h1 as i128;
            if *mu >= h0 {
                ranges.push((-h1i, h1i));
            } else {
                ranges.push((-h1i, -(h0 as i128)));
                ranges.push((h0 as i128, h1i));
            }
            let (mut lo_r, mut hi_r) = (i128::MIN, i128::MAX);
            if let Some((lo, hi)) = &self.real {
                let muq = Rational::from_integer((*mu).into());
                lo_r = (lo * &muq).ceil().to_integer().to_i128().unwrap_or(i128::MIN);
                hi_r = (hi * &muq).floor().to_integer().to_i128().unwrap_or(i128::MAX);
            }
            for (lo, hi) in ranges {
                for l in progression(r, m, lo.max(lo_r), hi.min(hi_r)) {
                    if (l.unsigned_abs() as u64).gcd(mu) != 1 {
                        continue;
                    }
                    out.push(Candidate {
                        height: (l.unsigned_abs() as u64).max(*mu),
                        abs_lambda: l.unsigned_abs() as u64,
                        negative: l < 0,
                        mu: *mu,
                    });
                }
            }
        }
        out.sort();
        out
    }
}

enum Outcome {
    Witness(Box<ConditionReport>),
    Miss(SearchStats),
}

/// Enumerates t0 = λ/μ in increasing height `max(|λ|, μ)` (then |λ|, then
/// positive before negative), λ in the class forced by the finite targets
/// and μ by the denominator policy, and returns every candidate whose
/// report is Pass or Conditional. Each hit is re-verified from scratch.
pub fn search_t0(inst: &ConjectureInstance, params: &SearchParams) -> Result<SearchResult> {
    let hyps = verify_hypotheses_asserting(inst, &params.asserted)?;
    if let Some(h) = hyps.iter().find(|h| h.verdict == NormVerdict::NotNorm) {
        return Err(Error::HypothesisFailed {
            which: format!("entry {} at {}", h.entry, h.place),
            detail: "b(t_v − a) is not a local norm; the instance is vacuous".into(),
        });
    }
    let bound = params.height_bound;
    let mut mus = Vec::new();
    let mut last_err = None;
    for mu in denominators(inst, params.denominators, bound) {
        match lambda_class(inst, mu) {
            Ok(Some((r, m))) => mus.push((mu, r, m)),
            Ok(None) => {}
            Err(e) => last_err = Some(e),
        }
    }
    if mus.is_empty() {
        return Err(match last_err {
            Some(Error::NonCoprimeModuli { .. }) | None => {
                Error::InfeasibleAtPrecision("no denominator admits a numerator class matching the targets".into())
            }
            Some(e) => e,
        });
    }
    let real = inst
        .target(PlaceOfQ::Real)
        .map(|t| (&t.t - t.eps().unwrap(), &t.t + t.eps().unwrap()));
    let plan = Plan { mus, real };

    let mut stats = SearchStats::default();
    let mut hits: Vec<ConditionReport> = Vec::new();
    let mut h0 = 0u64;
    while h0 <= bound {
        let h1 = (h0.saturating_mul(2).max(h0 + 255)).min(bound);
        let block = plan.block(h0, h1);
        let outcomes = crate::par::map_collect(&block, |c| evaluate(inst, &hyps, c));
        for (c, o) in block.iter().zip(outcomes) {
            match o? {
                Outcome::Witness(rep) => {
                    stats.candidates += 1;
                    stats.highest_height = stats.highest_height.max(c.height);
                    if !matches!(rep.overall, super::check::Overall::Pass) {
                        stats.conditional += 1;
                    }
                    hits.push(*rep);
                }
                Outcome::Miss(s) => stats.merge(&s),
            }
        }
        if params.max_hits.is_some_and(|m| hits.len() >= m) {
            hits.truncate(params.max_hits.unwrap());
            break;
        }
        if h1 == bound {
            break;
        }
        h0 = h1 + 1;
    }
    Ok(SearchResult { hits, stats })
}

fn evaluate(inst: &ConjectureInstance, hyps: &[super::check::HypothesisEntry], c: &Candidate) -> Result<Outcome> {
    let t0 = c.t0();
    let mut s = SearchStats {
        candidates: 1,
        highest_height: c.height,
        ..Default::default()
    };
    let c1 = check_condition1(inst, &t0);
    if c1.iter().any(|x| !x.pass) {
        s.condition1_failures += 1;
        return Ok(Outcome::Miss(s));
    }
    if inst.entries().iter().any(|e| e.value_at(&t0).is_zero()) {
        s.condition2_failures += 1;
        return Ok(Outcome::Miss(s));
    }
    let c2 = check_condition2(inst, &t0)?;
    if c2.failed() {
        s.condition2_failures += 1;
        for p in c2.failing_primes() {
            if c2.needs_s_inclusion.iter().any(|n| n.prime == p) {
                *s.needs_s_inclusion.entry(p).or_default() += 1;
            } else {
                *s.failures_by_prime.entry(p).or_default() += 1;
            }
        }
        return Ok(Outcome::Miss(s));
    }
    let overall = overall_status(hyps, &c1, &c2);
    // Re-verify from scratch, hypotheses included.
    let fresh_hyps = super::check::verify_hypotheses_asserting(inst, &asserted_of(hyps))?;
    let report = check_t0(inst, &t0, &fresh_hyps)?;
    if report.overall != overall || report.condition2 != c2 {
        return Err(Error::Internal(format!("re-verification of t0 = {t0} disagrees with the search")));
    }
    Ok(Outcome::Witness(Box::new(report)))
}

fn asserted_of(hyps: &[super::check::HypothesisEntry]) -> Assertions {
    hyps.iter().filter(|h| h.asserted).map(|h| (h.entry, h.place)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use crate::poly::PolyQ;
    use crate::split::instance::{Entry, LocalTarget};
    use num_traits::Signed;

    fn gaussian() -> Entry {
        Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap()
    }

    fn example() -> ConjectureInstance {
        ConjectureInstance::new(
            vec![gaussian()],
            [PlaceOfQ::Finite(2)],
            [LocalTarget::finite(2, rat_int(1), 3).unwrap(), LocalTarget::real(rat_int(10), rat_int(10)).unwrap()],
        )
        .unwrap()
    }

    /// First integer ≡ 1 mod 8 in [0, 20] whose odd prime factors are all ≡ 1 mod 4.
    /// Integers in [0, 20] that are 1 mod 8 with every odd prime factor 1 mod 4.
    fn oracle_witnesses() -> Vec<i64> {
        (0..=20i64)
            .filter(|n| n % 8 == 1)
            .filter(|&n| {
                let mut m = n;
                let mut p = 3;
                let mut ok = true;
                while m > 1 {
                    if m % p == 0 {
                        ok &= p % 4 == 1;
                        m /= p;
                    } else {
                        p += 2;
                    }
                }
                ok
            })
            .collect()
    }

    #[test]
    fn finds_seventeen() {
        let oracle = oracle_witnesses();
        let params = SearchParams {
            max_hits: Some(oracle.len()),
            ..SearchParams::new(1000)
        };
        let r = search_t0(&example(), &params).unwrap();
        let found: Vec<Rational> = r.hits.iter().map(|h| h.t0.clone()).collect();
        assert_eq!(found, oracle.iter().map(|&n| rat_int(n)).collect::<Vec<_>>());
        // t0 = 1 has P(t0) = 1 and passes vacuously; 17 is the first prime witness.
        assert_eq!(found, vec![rat_int(1), rat_int(17)]);
        assert!(r.stats.failures_by_prime.contains_key(&3));
    }

    #[test]
    fn rejects_vacuous_instance() {
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::real(rat_int(-5), rat_int(1)).unwrap()]).unwrap();
        assert!(matches!(search_t0(&inst, &SearchParams::first(100)), Err(Error::HypothesisFailed { .. })));
    }

    #[test]
    fn canonical_order_and_determinism() {
        let inst = ConjectureInstance::new(vec![gaussian()], [PlaceOfQ::Finite(2)], []).unwrap();
        let params = SearchParams {
            max_hits: Some(30),
            ..SearchParams::new(200)
        };
        let a = search_t0(&inst, &params).unwrap();
        let b = search_t0(&inst, &params).unwrap();
        let ta: Vec<Rational> = a.hits.iter().map(|h| h.t0.clone()).collect();
        let tb: Vec<Rational> = b.hits.iter().map(|h| h.t0.clone()).collect();
        assert_eq!(ta, tb);
        assert_eq!(a.stats, b.stats);
        let heights: Vec<u64> = ta
            .iter()
            .map(|t| t.numer().abs().to_u64().unwrap().max(t.denom().to_u64().unwrap()))
            .collect();
        assert!(heights.windows(2).all(|w| w[0] <= w[1]));
        // Fractions with 2-power denominators are allowed.
        assert!(ta.contains(&rat(1, 2)));
    }

    #[test]
    fn negative_valuation_targets() {
        // t₅ = 5⁻² with N = 1 forces 25 ∥ μ.
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::finite(5, rat(1, 25), 1).unwrap()]).unwrap();
        let r = search_t0(&inst, &SearchParams::first(10_000)).unwrap();
        let t0 = &r.hits[0].t0;
        assert_eq!(valuation_unchecked(t0, 5).finite(), Some(-2));
        assert!(r.hits[0].overall.is_witness());
    }
}
