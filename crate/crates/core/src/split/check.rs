//! Hypothesis verification and the checkers for conditions (1), (1') and (2).

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::instance::ConjectureInstance;
use crate::arith::{factor, Rational};
use crate::error::{Error, Result};
use crate::field::DegreeOneVerdict;
use crate::local::{local_norm_test, LocalElement, NormVerdict, PlaceOfQ, UndeterminedReason};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisEntry {
    pub entry: usize,
    pub place: PlaceOfQ,
    pub verdict: NormVerdict,
    /// The caller asserted this hypothesis where the tool could not decide it.
    pub asserted: bool,
}

/// `(entry index, place)` pairs the caller vouches for.
pub type Assertions = BTreeSet<(usize, PlaceOfQ)>;

/// Local norm test of `b_i(t_v − a_i)` for every entry and every place of S
/// carrying a target, aggregated over the places of k_i above v.
pub fn verify_hypotheses(inst: &ConjectureInstance) -> Result<Vec<HypothesisEntry>> {
    verify_hypotheses_asserting(inst, &Assertions::new())
}

pub fn verify_hypotheses_asserting(inst: &ConjectureInstance, asserted: &Assertions) -> Result<Vec<HypothesisEntry>> {
    let mut out = Vec::new();
    for (i, e) in inst.entries().iter().enumerate() {
        for (v, target) in inst.targets() {
            let x = LocalElement::exact(e.b.clone(), target.t.clone());
            let verdict = local_norm_test(&x, &e.ext, *v, None)?;
            let asserted = verdict.is_undetermined() && asserted.contains(&(i, *v));
            out.push(HypothesisEntry {
                entry: i,
                place: *v,
                verdict: if asserted {
                    NormVerdict::Undetermined(UndeterminedReason::Asserted)
                } else {
                    verdict
                },
                asserted,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlaceCheck {
    pub place: PlaceOfQ,
    pub pass: bool,
}

/// Condition (1): `v_p(t0 − t_v) ≥ N_v` at finite targets, `|t0 − t_v| ≤ ε` at the real one.
pub fn check_condition1(inst: &ConjectureInstance, t0: &Rational) -> Vec<PlaceCheck> {
    inst.targets()
        .values()
        .map(|t| PlaceCheck {
            place: t.place,
            pass: t.is_close(t0),
        })
        .collect()
}

/// Condition (1'): the finite clause of (1), and at the real place a common
/// sign of `(t0 − ρ)(t_v − ρ)` over every real root ρ of every `P_i`.
pub fn check_condition1prime(inst: &ConjectureInstance, t0: &Rational) -> bool {
    let finite_ok = inst
        .targets()
        .values()
        .filter(|t| t.place != PlaceOfQ::Real)
        .all(|t| t.is_close(t0));
    if !finite_ok {
        return false;
    }
    let Some(real) = inst.target(PlaceOfQ::Real) else {
        return true;
    };
    let mut signs = BTreeSet::new();
    for e in inst.entries() {
        for mut rho in e.field().real_roots() {
            let s0 = -(rho.cmp_rational(t0) as i8);
            let sv = -(rho.cmp_rational(&real.t) as i8);
            signs.insert(s0 * sv);
        }
    }
    signs.len() <= 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condition2Entry {
    pub entry: usize,
    pub prime: u64,
    /// The place w of k_i with `w(t0 − a_i) > 0`, as `(p, factor)`.
    pub place: String,
    pub verdict: DegreeOneVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NeedsInclusion {
    pub entry: usize,
    pub prime: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condition2 {
    pub checks: Vec<Condition2Entry>,
    pub needs_s_inclusion: Vec<NeedsInclusion>,
}

impl Condition2 {
    pub fn pass(&self) -> bool {
        self.needs_s_inclusion.is_empty() && self.checks.iter().all(|c| c.verdict == DegreeOneVerdict::Yes)
    }

    pub fn failed(&self) -> bool {
        !self.needs_s_inclusion.is_empty() || self.checks.iter().any(|c| c.verdict == DegreeOneVerdict::No)
    }

    /// Primes responsible for a failure.
    pub fn failing_primes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .checks
            .iter()
            .filter(|c| c.verdict == DegreeOneVerdict::No)
            .map(|c| c.prime)
            .chain(self.needs_s_inclusion.iter().map(|n| n.prime))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Condition (2): for each prime p ∉ S dividing the numerator of `P_i(t0)`,
/// the place w with `w(t0 − a_i) > 0` must carry a degree-1 place of `L_i`.
pub fn check_condition2(inst: &ConjectureInstance, t0: &Rational) -> Result<Condition2> {
    let mut out = Condition2 {
        checks: Vec::new(),
        needs_s_inclusion: Vec::new(),
    };
    for (i, e) in inst.entries().iter().enumerate() {
        let val = e.value_at(t0);
        if val.is_zero() {
            return Err(Error::domain(format!("t0 = {t0} is a root of P_{i}")));
        }
        let num = Rational::from_integer(val.numer().clone());
        for (p, _) in factor(&num)?.factors {
            let p = p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?;
            if inst.in_s(p) {
                continue;
            }
            match e.field().positive_valuation_place(t0, p) {
                Ok(Some(w)) => out.checks.push(Condition2Entry {
                    entry: i,
                    prime: p,
                    place: w.describe("a"),
                    verdict: e.ext.has_degree_one_place_over(&w),
                }),
                Ok(None) => {}
                Err(Error::NeedsSInclusion { prime, reason }) => out.needs_s_inclusion.push(NeedsInclusion {
                    entry: i,
                    prime,
                    reason,
                }),
                Err(Error::RamifiedPrime(prime)) => out.needs_s_inclusion.push(NeedsInclusion {
                    entry: i,
                    prime,
                    reason: "ramified prime outside S".into(),
                }),
                Err(err) => return Err(err),
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Overall {
    Pass,
    Fail { reason: String },
    Conditional { assumptions: Vec<String> },
}

impl Overall {
    pub fn is_witness(&self) -> bool {
        !matches!(self, Overall::Fail { .. })
    }
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Overall::Pass => write!(f, "pass"),
            Overall::Fail { reason } => write!(f, "fail ({reason})"),
            Overall::Conditional { assumptions } => write!(f, "conditional ({})", assumptions.join("; ")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    #[serde(serialize_with = "crate::ser::display")]
    pub t0: Rational,
    pub hypotheses: Vec<HypothesisEntry>,
    pub condition1: Vec<PlaceCheck>,
    pub condition1prime: bool,
    pub condition2: Condition2,
    pub overall: Overall,
}

/// Full report for `t0` against precomputed hypothesis verdicts. The overall
/// status uses the hypotheses, condition (1) and condition (2); (1') is
/// reported alongside.
pub fn check_t0(inst: &ConjectureInstance, t0: &Rational, hypotheses: &[HypothesisEntry]) -> Result<ConditionReport> {
    let condition1 = check_condition1(inst, t0);
    let condition1prime = check_condition1prime(inst, t0);
    let condition2 = check_condition2(inst, t0)?;
    let overall = overall_status(hypotheses, &condition1, &condition2);
    Ok(ConditionReport {
        t0: t0.clone(),
        hypotheses: hypotheses.to_vec(),
        condition1,
        condition1prime,
        condition2,
        overall,
    })
}

pub fn overall_status(hypotheses: &[HypothesisEntry], c1: &[PlaceCheck], c2: &Condition2) -> Overall {
    if let Some(h) = hypotheses.iter().find(|h| h.verdict == NormVerdict::NotNorm) {
        return Overall::Fail {
            reason: format!("hypothesis for entry {} at {} is not a local norm", h.entry, h.place),
        };
    }
    if let Some(c) = c1.iter().find(|c| !c.pass) {
        return Overall::Fail {
            reason: format!("condition (1) fails at {}", c.place),
        };
    }
    if let Some(n) = c2.needs_s_inclusion.first() {
        return Overall::Fail {
            reason: format!("prime {} needs inclusion in S: {}", n.prime, n.reason),
        };
    }
    if let Some(c) = c2.checks.iter().find(|c| c.verdict == DegreeOneVerdict::No) {
        return Overall::Fail {
            reason: format!("condition (2) fails for entry {} at {}", c.entry, c.place),
        };
    }
    let mut assumptions = Vec::new();
    for h in hypotheses {
        if let NormVerdict::Undetermined(r) = h.verdict {
            if r != UndeterminedReason::Asserted {
                assumptions.push(format!("hypothesis for entry {} at {} undetermined ({})", h.entry, h.place, h.verdict));
            }
        }
    }
    for c in &c2.checks {
        if c.verdict == DegreeOneVerdict::Undetermined {
            assumptions.push(format!("degree-one place for entry {} over {} undetermined", c.entry, c.place));
        }
    }
    if assumptions.is_empty() {
        Overall::Pass
    } else {
        Overall::Conditional { assumptions }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use crate::poly::PolyQ;
    use crate::split::instance::{Entry, LocalTarget};

    fn gaussian() -> Entry {
        Entry::new(PolyQ::from_ints(&[0, 1]), vec![PolyQ::one(), PolyQ::zero(), PolyQ::one()], PolyQ::one()).unwrap()
    }

    fn verdict_at(inst: &ConjectureInstance, v: PlaceOfQ) -> NormVerdict {
        verify_hypotheses(inst).unwrap().into_iter().find(|h| h.place == v).unwrap().verdict
    }

    #[test]
    fn hypothesis_examples() {
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::real(rat_int(5), rat_int(1)).unwrap()]).unwrap();
        assert_eq!(verdict_at(&inst, PlaceOfQ::Real), NormVerdict::IsNorm);
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::real(rat_int(-5), rat_int(1)).unwrap()]).unwrap();
        assert_eq!(verdict_at(&inst, PlaceOfQ::Real), NormVerdict::NotNorm);
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::finite(3, rat_int(9), 1).unwrap()]).unwrap();
        assert_eq!(verdict_at(&inst, PlaceOfQ::Finite(3)), NormVerdict::IsNorm);
    }

    #[test]
    fn condition2_examples() {
        let inst = ConjectureInstance::new(vec![gaussian()], [PlaceOfQ::Finite(2)], []).unwrap();
        let c = check_condition2(&inst, &rat_int(45)).unwrap();
        assert!(!c.pass());
        assert_eq!(c.failing_primes(), vec![3]);
        assert!(check_condition2(&inst, &rat_int(25)).unwrap().pass());
        assert!(check_condition2(&inst, &rat(13, 4)).unwrap().pass());
    }

    #[test]
    fn condition1_examples() {
        let inst = ConjectureInstance::new(vec![gaussian()], [], [LocalTarget::finite(2, rat(5, 4), 1).unwrap()]).unwrap();
        assert!(check_condition1(&inst, &rat(13, 4)).iter().all(|c| c.pass));
        assert!(check_condition1(&inst, &rat(5, 4)).iter().all(|c| c.pass));
        assert!(!check_condition1(&inst, &rat(7, 4)).iter().all(|c| c.pass));
    }

    #[test]
    fn condition1prime_example() {
        let e = Entry::new(
            PolyQ::from_ints(&[-2, 0, 1]),
            vec![PolyQ::from_ints(&[0, -1]), PolyQ::zero(), PolyQ::one()],
            PolyQ::one(),
        )
        .unwrap();
        let inst = ConjectureInstance::new(vec![e], [], [LocalTarget::real(rat_int(0), rat_int(5)).unwrap()]).unwrap();
        assert!(!check_condition1prime(&inst, &rat_int(3)));
        assert!(check_condition1prime(&inst, &rat(1, 2)));
        // Independent sign oracle through f64 evaluation of ±√2.
        let r = 2f64.sqrt();
        assert!((3.0 - r) * (0.0 - r) < 0.0 && (3.0 + r) * (0.0 + r) > 0.0);
    }

    #[test]
    fn report_statuses() {
        let inst = ConjectureInstance::new(
            vec![gaussian()],
            [],
            [LocalTarget::finite(2, rat_int(1), 3).unwrap(), LocalTarget::real(rat_int(10), rat_int(10)).unwrap()],
        )
        .unwrap();
        let hyp = verify_hypotheses(&inst).unwrap();
        assert_eq!(check_t0(&inst, &rat_int(17), &hyp).unwrap().overall, Overall::Pass);
        assert!(matches!(check_t0(&inst, &rat_int(9), &hyp).unwrap().overall, Overall::Fail { .. }));
        assert!(matches!(check_t0(&inst, &rat_int(33), &hyp).unwrap().overall, Overall::Fail { .. }));
    }
}
