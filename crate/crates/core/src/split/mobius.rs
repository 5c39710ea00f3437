//! Change of coordinates t ↦ (αt + β)/(γt + δ) on instances, with the
//! hypotheses it needs and the conclusions it guarantees.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::check::{verify_hypotheses, HypothesisEntry};
use super::instance::{ConjectureInstance, Entry, LocalTarget};
use crate::arith::{crt_solve, factor, pow_big, reduce_mod_big, valuation_unchecked, Congruence, CongruenceSystem, Rational, Valuation};
use crate::error::{Error, Result};
use crate::field::NumberFieldAbs;
use crate::local::{local_norm_test_element, NormVerdict, PlaceOfQ, Precision};
use crate::poly::PolyQ;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mobius {
    #[serde(serialize_with = "crate::ser::display")]
    pub alpha: Rational,
    #[serde(serialize_with = "crate::ser::display")]
    pub beta: Rational,
    #[serde(serialize_with = "crate::ser::display")]
    pub gamma: Rational,
    #[serde(serialize_with = "crate::ser::display")]
    pub delta: Rational,
}

impl Mobius {
    pub fn new(alpha: Rational, beta: Rational, gamma: Rational, delta: Rational) -> Result<Self> {
        let m = Mobius {
            alpha,
            beta,
            gamma,
            delta,
        };
        if m.det().is_zero() {
            return Err(Error::domain("αδ − βγ must be nonzero"));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Mobius {
            alpha: Rational::one(),
            beta: Rational::zero(),
            gamma: Rational::zero(),
            delta: Rational::one(),
        }
    }

    pub fn det(&self) -> Rational {
        &self.alpha * &self.delta - &self.beta * &self.gamma
    }

    /// `(αt + β)/(γt + δ)`, `None` at the pole.
    pub fn apply(&self, t: &Rational) -> Option<Rational> {
        let den = &self.gamma * t + &self.delta;
        (!den.is_zero()).then(|| (&self.alpha * t + &self.beta) / den)
    }

    /// The inverse map `s ↦ (δs − β)/(−γs + α)`.
    pub fn inverse(&self) -> Mobius {
        Mobius {
            alpha: self.delta.clone(),
            beta: -&self.beta,
            gamma: -&self.gamma,
            delta: self.alpha.clone(),
        }
    }
}

/// `Σ c_j (δs − β)^j (α − γs)^{d−j}`, made monic: the minimal polynomial of
/// `(αa + β)/(γa + δ)` when `P` is that of `a`.
fn transformed_poly(p: &PolyQ, m: &Mobius) -> PolyQ {
    let d = p.degree();
    let num = PolyQ::new(vec![-&m.beta, m.delta.clone()]);
    let den = PolyQ::new(vec![m.alpha.clone(), -&m.gamma]);
    let mut acc = PolyQ::zero();
    for (j, c) in p.coeffs().iter().enumerate() {
        let term = &(&num.pow(j as u32) * &den.pow((d - j) as u32)) * &PolyQ::constant(c.clone());
        acc = &acc + &term;
    }
    acc.monic()
}

/// Horner evaluation of `c(a)` at an element `x` of `k`.
fn eval_in(k: &NumberFieldAbs, c: &PolyQ, x: &PolyQ) -> PolyQ {
    let mut acc = PolyQ::zero();
    for coef in c.coeffs().iter().rev() {
        acc = k.reduce(&(&k.mul(&acc, x) + &PolyQ::constant(coef.clone())));
    }
    acc
}

fn primes_of(q: &Rational) -> Result<Vec<u64>> {
    factor(q)?
        .factors
        .into_iter()
        .map(|(p, _)| p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits")))
        .collect()
}

/// Precision data carried from a target of the original instance to the
/// transformed one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransferredTarget {
    pub original: LocalTarget,
    pub transformed: LocalTarget,
}

#[derive(Clone, Debug)]
pub struct ChangeOfVariables {
    pub original: ConjectureInstance,
    pub instance: ConjectureInstance,
    pub mobius: Mobius,
    /// Hypothesis (iii) verdicts, `(entry, place, verdict)`.
    pub hypothesis_iii: Vec<HypothesisEntry>,
    /// Primes of S'₀ outside S.
    pub s0_extra: Vec<u64>,
    /// Primes of S' outside S (targets 0 there).
    pub new_primes: Vec<u64>,
    pub transferred: Vec<TransferredTarget>,
    /// `a_i'` and `b_i'` as elements of the original `k_i` (polynomials in `a_i`).
    a_prime_orig: Vec<PolyQ>,
    b_prime_orig: Vec<PolyQ>,
}

fn fail(which: &str, detail: String) -> Error {
    Error::HypothesisFailed {
        which: which.to_string(),
        detail,
    }
}

/// Applies the coordinate change to every entry and target. Hypotheses (i)
/// and (ii) are checked exactly; (iii) by local norm tests, where a NotNorm
/// verdict fails and Undetermined is recorded.
pub fn change_variables(inst: &ConjectureInstance, m: &Mobius, s_prime: &[PlaceOfQ]) -> Result<ChangeOfVariables> {
    let det = m.det();
    let s_primes: BTreeSet<u64> = inst.s_primes().into_iter().collect();
    // (i)
    for (i, e) in inst.entries().iter().enumerate() {
        let k = e.field();
        let ga_d = k.reduce(&PolyQ::new(vec![m.delta.clone(), m.gamma.clone()]));
        if ga_d.is_zero() {
            return Err(fail("i", format!("γa_{i} + δ = 0")));
        }
    }
    for t in inst.targets().values() {
        if (&m.gamma * &t.t + &m.delta).is_zero() {
            return Err(fail("i", format!("γt_v + δ = 0 at {}", t.place)));
        }
    }
    // (ii)
    if m.alpha.is_zero() {
        return Err(fail("ii", "α = 0 is not a unit".into()));
    }
    for p in primes_of(&m.alpha)? {
        if !s_primes.contains(&p) {
            return Err(fail("ii", format!("α is not a unit at {p} ∉ S")));
        }
    }
    for (i, e) in inst.entries().iter().enumerate() {
        let k = e.field();
        let el = k.reduce(&PolyQ::new(vec![m.beta.clone(), m.alpha.clone()]));
        if el.is_zero() {
            return Err(fail("ii", format!("αa_{i} + β = 0")));
        }
        for p in k.non_unit_primes(&el)? {
            if !s_primes.contains(&p) {
                return Err(fail("ii", format!("αa_{i} + β is not a unit above {p} ∉ S")));
            }
        }
    }
    // (iii)
    let mut hyp3 = Vec::new();
    for (i, e) in inst.entries().iter().enumerate() {
        for t in inst.targets().values() {
            let c = &det / (&m.gamma * &t.t + &m.delta);
            let verdict = local_norm_test_element(&PolyQ::constant(c), &e.ext, t.place, None)?;
            if verdict == NormVerdict::NotNorm {
                return Err(fail(
                    "iii",
                    format!("(αδ − βγ)/(γt_v + δ) is not a local norm for entry {i} at {}", t.place),
                ));
            }
            hyp3.push(HypothesisEntry {
                entry: i,
                place: t.place,
                verdict,
                asserted: false,
            });
        }
    }

    // New entries.
    let mut entries = Vec::new();
    let mut a_prime_orig = Vec::new();
    let mut b_prime_orig = Vec::new();
    let mut s0: BTreeSet<u64> = BTreeSet::new();
    for q in [&m.alpha, &m.gamma] {
        for p in primes_of(&Rational::from_integer(q.denom().clone()))? {
            s0.insert(p);
        }
    }
    for e in inst.entries() {
        let k = e.field();
        let num = k.reduce(&PolyQ::new(vec![m.beta.clone(), m.alpha.clone()]));
        let den = k.reduce(&PolyQ::new(vec![m.delta.clone(), m.gamma.clone()]));
        let a_p = k.div(&num, &den)?;
        let b_p = k.mul(&e.b, &den);
        let p_new = transformed_poly(e.p(), m);
        let k_new = NumberFieldAbs::new(p_new.clone())?;
        // a = (δa' − β)/(α − γa') in the new field.
        let a_in_new = k_new.div(
            &PolyQ::new(vec![-&m.beta, m.delta.clone()]),
            &PolyQ::new(vec![m.alpha.clone(), -&m.gamma]),
        )?;
        let g_new: Vec<PolyQ> = e
            .ext
            .g()
            .coeffs
            .iter()
            .map(|c| eval_in(&k_new, c, &a_in_new))
            .collect();
        let b_new = eval_in(&k_new, &e.b, &a_in_new);
        let b_new = k_new.mul(&b_new, &eval_in(&k_new, &den, &a_in_new));
        for c in p_new.coeffs() {
            s0.extend(primes_of(&Rational::from_integer(c.denom().clone()))?);
        }
        s0.extend(k_new.non_unit_primes(&b_new)?);
        entries.push(Entry::over(k_new, g_new, b_new)?);
        a_prime_orig.push(a_p);
        b_prime_orig.push(b_p);
    }
    let mut extra: BTreeSet<u64> = s0.difference(&s_primes).copied().collect();
    let s0_extra: Vec<u64> = extra.iter().copied().collect();
    for v in s_prime {
        if let PlaceOfQ::Finite(p) = v {
            if !s_primes.contains(p) {
                extra.insert(*p);
            }
        }
    }
    for e in &entries {
        for p in e.required_primes()?.into_keys() {
            if !s_primes.contains(&p) {
                extra.insert(p);
            }
        }
    }

    // Targets.
    let mut transferred = Vec::new();
    let mut targets = Vec::new();
    for t in inst.targets().values() {
        let tp = m.apply(&t.t).expect("checked in (i)");
        let a_minus = &m.alpha - &m.gamma * &tp;
        let new_t = match (&t.precision, t.place) {
            (Precision::Adic(n), PlaceOfQ::Finite(p)) => {
                let e = valuation_unchecked(&a_minus, p).finite().unwrap();
                let vd = valuation_unchecked(&det, p).finite().unwrap();
                let mut np = (n - vd + 2 * e).max(1);
                if let Valuation::Finite(vg) = valuation_unchecked(&m.gamma, p) {
                    np = np.max(e - vg + 1);
                }
                LocalTarget::finite(p, tp, np)?
            }
            (Precision::Real(eps), _) => {
                let a = a_minus.abs();
                let two = Rational::from_integer(2.into());
                let mut ep = eps * &a * &a / (&two * det.abs());
                if !m.gamma.is_zero() {
                    let cap = &a / (&two * m.gamma.abs());
                    if cap < ep {
                        ep = cap;
                    }
                }
                LocalTarget::real(tp, ep)?
            }
            _ => return Err(Error::Internal("target precision does not match its place".into())),
        };
        transferred.push(TransferredTarget {
            original: t.clone(),
            transformed: new_t.clone(),
        });
        targets.push(new_t);
    }
    for &p in &extra {
        targets.push(LocalTarget::finite(p, Rational::zero(), 1)?);
    }
    let s_new: Vec<PlaceOfQ> = inst
        .s()
        .iter()
        .copied()
        .chain(extra.iter().map(|&p| PlaceOfQ::Finite(p)))
        .collect();
    let instance = ConjectureInstance::new(entries, s_new, targets)?;
    let new_primes: Vec<u64> = instance
        .s_primes()
        .into_iter()
        .filter(|p| !s_primes.contains(p))
        .collect();
    Ok(ChangeOfVariables {
        original: inst.clone(),
        instance,
        mobius: m.clone(),
        hypothesis_iii: hyp3,
        s0_extra,
        new_primes,
        transferred,
        a_prime_orig,
        b_prime_orig,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConclusionReport {
    #[serde(serialize_with = "crate::ser::display")]
    pub t0_prime: Rational,
    #[serde(serialize_with = "crate::ser::display")]
    pub t0: Rational,
    /// (1): no transformed hypothesis is NotNorm.
    pub c1: bool,
    /// Transformed hypotheses left Undetermined.
    pub c1_undetermined: usize,
    /// (2): closeness transfers at every target whose premise holds.
    pub c2: bool,
    pub c2_premises_met: usize,
    /// (3): the four-fold sign product is constant over real places.
    pub c3: bool,
    /// Whether t0' is close to 0 at every prime of S' ∖ S.
    pub c4_premise: bool,
    /// (4): prime-transfer property.
    pub c4: bool,
    pub c4_primes_checked: usize,
    /// `b_i'(t0' − a_i') = b_i(t0 − a_i)(α − γt0')` for every i.
    pub identity: bool,
    pub failures: Vec<String>,
}

impl ConclusionReport {
    pub fn all_hold(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.c4 && self.identity
    }
}

impl ChangeOfVariables {
    pub fn a_prime(&self, i: usize) -> &PolyQ {
        &self.a_prime_orig[i]
    }

    pub fn b_prime(&self, i: usize) -> &PolyQ {
        &self.b_prime_orig[i]
    }

    /// Checks conclusions (1)–(4) and the norm identity at `t0'`.
    pub fn verify_conclusions(&self, t0p: &Rational) -> Result<ConclusionReport> {
        let m = &self.mobius;
        if m.alpha == &m.gamma * t0p {
            return Err(Error::domain("α = γt0' has no preimage"));
        }
        let t0 = m.inverse().apply(t0p).expect("α ≠ γt0'");
        let mut r = ConclusionReport {
            t0_prime: t0p.clone(),
            t0: t0.clone(),
            ..Default::default()
        };

        // (1)
        let hyps = verify_hypotheses(&self.instance)?;
        r.c1 = hyps.iter().all(|h| h.verdict != NormVerdict::NotNorm);
        r.c1_undetermined = hyps.iter().filter(|h| h.verdict.is_undetermined()).count();
        for h in hyps.iter().filter(|h| h.verdict == NormVerdict::NotNorm) {
            r.failures.push(format!("(1) entry {} at {}", h.entry, h.place));
        }

        // (2)
        r.c2 = true;
        for tt in &self.transferred {
            if tt.transformed.is_close(t0p) {
                r.c2_premises_met += 1;
                if !tt.original.is_close(&t0) {
                    r.c2 = false;
                    r.failures.push(format!("(2) at {}", tt.original.place));
                }
            }
        }

        // (3)
        r.c3 = true;
        if let Some(tv) = self.original.target(PlaceOfQ::Real) {
            let tvp = m.apply(&tv.t).unwrap();
            let mut signs = BTreeSet::new();
            for e in self.original.entries() {
                for mut rho in e.field().real_roots() {
                    let den = PolyQ::new(vec![m.delta.clone(), m.gamma.clone()]);
                    let sd = rho.sign_of(&den);
                    // sign(s − ρ') = sign((sγ − α)ρ + (sδ − β)) · sign(γρ + δ)
                    let mut prime_sign = |s: &Rational| {
                        let lin = PolyQ::new(vec![s * &m.delta - &m.beta, s * &m.gamma - &m.alpha]);
                        rho.sign_of(&lin) * sd
                    };
                    let a = prime_sign(t0p) * prime_sign(&tvp);
                    let b = -(rho.cmp_rational(&t0) as i8) * -(rho.cmp_rational(&tv.t) as i8);
                    signs.insert(a * b);
                }
            }
            if signs.len() > 1 {
                r.c3 = false;
                r.failures.push("(3) sign product varies".into());
            }
        }

        // (4)
        r.c4_premise = self
            .new_primes
            .iter()
            .all(|&p| valuation_unchecked(t0p, p).at_least(1));
        r.c4 = true;
        if r.c4_premise {
            let s: BTreeSet<u64> = self.original.s_primes().into_iter().collect();
            let s_new: BTreeSet<u64> = self.instance.s_primes().into_iter().collect();
            for (i, e) in self.original.entries().iter().enumerate() {
                let k = e.field();
                let val = e.value_at(&t0);
                if val.is_zero() {
                    continue;
                }
                let val_new = self.instance.entries()[i].value_at(t0p);
                let new_primes: BTreeMap<u64, i64> = factor(&val_new)?
                    .factors
                    .into_iter()
                    .map(|(p, e)| (p.to_u64().unwrap(), e))
                    .collect();
                for p in primes_of(&Rational::from_integer(val.numer().clone()))? {
                    if s.contains(&p) {
                        continue;
                    }
                    r.c4_primes_checked += 1;
                    if s_new.contains(&p) {
                        r.c4 = false;
                        r.failures.push(format!("(4) entry {i}: {p} lies in S' ∖ S"));
                        continue;
                    }
                    let Some(w) = k.positive_valuation_place(&t0, p)? else {
                        continue;
                    };
                    let el = &PolyQ::constant(t0p.clone()) - &self.a_prime_orig[i];
                    let vw = k.valuation_at(&el, &w)?;
                    let in_new = new_primes.get(&p).is_some_and(|&e| e > 0);
                    if !vw.at_least(1) || !in_new {
                        r.c4 = false;
                        r.failures.push(format!("(4) entry {i}: w(t0' − a') ≤ 0 at {}", w.describe("a")));
                    }
                }
            }
        }

        // Identity b'(t0' − a') = b(t0 − a)(α − γt0') in the original k_i.
        r.identity = true;
        for (i, e) in self.original.entries().iter().enumerate() {
            let k = e.field();
            let lhs = k.mul(&self.b_prime_orig[i], &(&PolyQ::constant(t0p.clone()) - &self.a_prime_orig[i]));
            let rhs = k.mul(
                &k.mul(&e.b, &k.t_minus_a(&t0)),
                &PolyQ::constant(&m.alpha - &m.gamma * t0p),
            );
            if k.reduce(&(&lhs - &rhs)) != PolyQ::zero() {
                r.identity = false;
                r.failures.push(format!("identity fails for entry {i}"));
            }
        }
        Ok(r)
    }

    /// Samples of `t0'` meeting every transformed target and the S' ∖ S
    /// premise: the CRT class of the transformed targets shifted by multiples
    /// of its modulus.
    pub fn premise_points(&self, count: usize) -> Result<Vec<Rational>> {
        let mut sys = CongruenceSystem::new();
        let mut den = BigInt::one();
        for t in self.instance.targets().values() {
            if let PlaceOfQ::Finite(p) = t.place {
                let vt = valuation_unchecked(&t.t, p).finite().unwrap_or(0);
                den *= pow_big(&BigInt::from(p), (-vt).max(0) as u32);
            }
        }
        let den_q = Rational::from_integer(den.clone());
        for t in self.instance.targets().values() {
            if let (PlaceOfQ::Finite(p), Precision::Adic(n)) = (t.place, &t.precision) {
                let c = &den_q * &t.t;
                let m = n + valuation_unchecked(&den_q, p).finite().unwrap();
                let modulus = pow_big(&BigInt::from(p), m.max(1) as u32);
                let r = reduce_mod_big(&c, &modulus)
                    .ok_or_else(|| Error::Internal("scaled target not integral".into()))?;
                sys.push(Congruence::new(r, modulus)?);
            }
        }
        let (r0, modulus) = crt_solve(&sys)?;
        let center = self.instance.target(PlaceOfQ::Real).map(|t| t.t.clone()).unwrap_or_default();
        let s_new: BTreeSet<u64> = self.instance.s_primes().into_iter().collect();
        // Extra denominators q from primes outside S' shrink the spacing of
        // the class until it meets the real window.
        let qs = std::iter::once(1u64).chain(crate::arith::primes_up_to(100_000).into_iter().filter(|p| !s_new.contains(p)));
        let mut out = Vec::new();
        for q in qs {
            if out.len() >= count {
                break;
            }
            let qb = BigInt::from(q);
            let d = &den * &qb;
            let class = (&r0 * &qb) % &modulus;
            let target = (&center * Rational::from_integer(d.clone())).round().to_integer();
            let base = &target - (&target - &class).mod_floor(&modulus);
            for k in -1i64..=2 {
                let t = Rational::new(&base + &modulus * BigInt::from(k), d.clone());
                if out.len() < count && !out.contains(&t) && self.is_premise_point(&t) {
                    out.push(t);
                }
            }
        }
        Ok(out)
    }

    fn is_premise_point(&self, t: &Rational) -> bool {
        if !(self.instance.targets().values().all(|tt| tt.is_close(t))
            && self.mobius.alpha != &self.mobius.gamma * t
            && self.instance.entries().iter().all(|e| !e.value_at(t).is_zero()))
        {
            return false;
        }
        let t0 = self.mobius.inverse().apply(t).unwrap();
        self.original.entries().iter().all(|e| !e.value_at(&t0).is_zero())
    }
}
