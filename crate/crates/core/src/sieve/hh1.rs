//! Pairs `(λ₀, μ₀)` where every form takes an S-unit times a single prime
//! outside S, subject to closeness conditions at the places of S.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::form::HomogeneousForm;
use crate::arith::factor::prime_certificate;
use crate::arith::{crt_solve, is_prime_u64, pow_big, primes_up_to, reduce_mod_big, Congruence, CongruenceSystem, PrimalityCertificate, Rational};
use crate::error::{Error, Result};

/// A closeness condition on `(λ₀, μ₀)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hh1Target {
    /// `λ₀ ≡ λ_p`, `μ₀ ≡ μ_p (mod p^N)`; both targets must be p-integral.
    Finite { p: u64, lambda: Rational, mu: Rational, precision: u32 },
    /// Chordal distance from `[λ_∞ : μ_∞]` at most ε, and `λ₀λ_∞ + μ₀μ_∞ > 0`.
    Real { lambda: Rational, mu: Rational, eps: Rational },
}

#[derive(Clone, Debug)]
pub struct Hh1Problem {
    forms: Vec<HomogeneousForm>,
    s: BTreeSet<u64>,
    targets: Vec<Hh1Target>,
    lambda_class: (BigInt, BigInt),
    mu_class: (BigInt, BigInt),
}

/// Search box `|λ| ≤ lambda_max`, `|μ| ≤ mu_max`, processed in segments of
/// `segment` consecutive μ values.
#[derive(Clone, Debug, Serialize)]
pub struct Hh1Bounds {
    pub lambda_max: u64,
    pub mu_max: u64,
    /// Stop after the first segment that brings the total to this many hits.
    pub max_hits: Option<usize>,
    pub segment: usize,
}

impl Hh1Bounds {
    pub fn new(lambda_max: u64, mu_max: u64) -> Self {
        Hh1Bounds { lambda_max, mu_max, max_hits: None, segment: 64 }
    }
}

/// How one form's value factors: `sign · ∏ s_part · prime`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormCertificate {
    #[serde(serialize_with = "crate::ser::display")]
    pub value: BigInt,
    pub sign: i8,
    pub s_part: Vec<(u64, u32)>,
    #[serde(serialize_with = "crate::ser::display")]
    pub prime: BigUint,
    pub exponent: u32,
    pub certificate: PrimalityCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hh1Solution {
    #[serde(serialize_with = "crate::ser::display")]
    pub lambda: BigInt,
    #[serde(serialize_with = "crate::ser::display")]
    pub mu: BigInt,
    pub forms: Vec<FormCertificate>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "form", rename_all = "snake_case")]
pub enum Hh1Rejection {
    Congruence,
    RealDistance,
    RealSign,
    ZeroValue(usize),
    /// The value is an S-unit.
    NoOutsidePrime(usize),
    /// The part outside S is not a single prime to the first power.
    NotPrime(usize),
    Uncertified(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Hh1Stats {
    pub segments: u64,
    /// Pairs in the box meeting the congruence conditions.
    pub pairs: u64,
    pub real_rejected: u64,
    pub zero_value: u64,
    pub no_outside_prime: u64,
    pub not_prime: u64,
    pub uncertified: u64,
    pub hits: u64,
}

impl Hh1Stats {
    fn merge(&mut self, o: &Hh1Stats) {
        self.segments += o.segments;
        self.pairs += o.pairs;
        self.real_rejected += o.real_rejected;
        self.zero_value += o.zero_value;
        self.no_outside_prime += o.no_outside_prime;
        self.not_prime += o.not_prime;
        self.uncertified += o.uncertified;
        self.hits += o.hits;
    }

    fn record(&mut self, r: &Hh1Rejection) {
        match r {
            Hh1Rejection::Congruence => {}
            Hh1Rejection::RealDistance | Hh1Rejection::RealSign => self.real_rejected += 1,
            Hh1Rejection::ZeroValue(_) => self.zero_value += 1,
            Hh1Rejection::NoOutsidePrime(_) => self.no_outside_prime += 1,
            Hh1Rejection::NotPrime(_) => self.not_prime += 1,
            Hh1Rejection::Uncertified(_) => self.uncertified += 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Hh1Report {
    pub hits: Vec<Hh1Solution>,
    pub stats: Hh1Stats,
}

impl Hh1Problem {
    /// `s` lists the finite primes of S; the real place is always in S.
    /// Target primes join S.
    pub fn new(forms: Vec<HomogeneousForm>, s: impl IntoIterator<Item = u64>, targets: Vec<Hh1Target>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::domain("at least one form is required"));
        }
        let mut s: BTreeSet<u64> = s.into_iter().collect();
        if let Some(&p) = s.iter().find(|&&p| !is_prime_u64(p)) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        let mut lam_sys = CongruenceSystem::new();
        let mut mu_sys = CongruenceSystem::new();
        let mut reals = 0;
        for t in &targets {
            match t {
                Hh1Target::Finite { p, lambda, mu, precision } => {
                    if !is_prime_u64(*p) {
                        return Err(Error::domain(format!("{p} is not prime")));
                    }
                    s.insert(*p);
                    let m = pow_big(&BigInt::from(*p), *precision);
                    for (x, sys) in [(lambda, &mut lam_sys), (mu, &mut mu_sys)] {
                        let r = reduce_mod_big(x, &m)
                            .ok_or_else(|| Error::domain(format!("target {x} is not {p}-integral")))?;
                        sys.push(Congruence::new(r, m.clone())?);
                    }
                }
                Hh1Target::Real { lambda, mu, eps } => {
                    reals += 1;
                    if lambda.is_zero() && mu.is_zero() {
                        return Err(Error::Precondition("real target must not be (0, 0)".into()));
                    }
                    if !eps.is_positive() {
                        return Err(Error::domain("ε must be positive"));
                    }
                }
            }
        }
        if reals > 1 {
            return Err(Error::domain("at most one real target"));
        }
        let solve = |sys: &CongruenceSystem| -> Result<(BigInt, BigInt)> {
            if sys.modulus().is_one() {
                return Ok((BigInt::zero(), BigInt::one()));
            }
            crt_solve(sys).map_err(|e| Error::InfeasibleAtPrecision(format!("incompatible congruence targets: {e}")))
        };
        let lambda_class = solve(&lam_sys)?;
        let mu_class = solve(&mu_sys)?;
        check_s_free_values(&forms, &s)?;
        Ok(Hh1Problem { forms, s, targets, lambda_class, mu_class })
    }

    pub fn forms(&self) -> &[HomogeneousForm] {
        &self.forms
    }

    pub fn s(&self) -> &BTreeSet<u64> {
        &self.s
    }

    pub fn targets(&self) -> &[Hh1Target] {
        &self.targets
    }

    /// Every condition at `(λ₀, μ₀)`, the certificates on success.
    pub fn check(&self, lambda: &BigInt, mu: &BigInt) -> Result<std::result::Result<Hh1Solution, Hh1Rejection>> {
        let (lam_q, mu_q) = (Rational::from_integer(lambda.clone()), Rational::from_integer(mu.clone()));
        for t in &self.targets {
            match t {
                Hh1Target::Finite { p, lambda: lt, mu: mt, precision } => {
                    let m = pow_big(&BigInt::from(*p), *precision);
                    let ok = |x: &Rational, y: &Rational| reduce_mod_big(&(x - y), &m).is_some_and(|r| r.is_zero());
                    if !ok(&lam_q, lt) || !ok(&mu_q, mt) {
                        return Ok(Err(Hh1Rejection::Congruence));
                    }
                }
                Hh1Target::Real { lambda: lt, mu: mt, eps } => {
                    let cross = &lam_q * mt - &mu_q * lt;
                    let n0 = &lam_q * &lam_q + &mu_q * &mu_q;
                    let n1 = lt * lt + mt * mt;
                    if &cross * &cross > eps * eps * n0 * n1 {
                        return Ok(Err(Hh1Rejection::RealDistance));
                    }
                    if !(&lam_q * lt + &mu_q * mt).is_positive() {
                        return Ok(Err(Hh1Rejection::RealSign));
                    }
                }
            }
        }
        let mut certs = Vec::with_capacity(self.forms.len());
        for (i, f) in self.forms.iter().enumerate() {
            match self.certify_value(f.eval(lambda, mu), i)? {
                Ok(c) => certs.push(c),
                Err(r) => return Ok(Err(r)),
            }
        }
        Ok(Ok(Hh1Solution { lambda: lambda.clone(), mu: mu.clone(), forms: certs }))
    }

    fn certify_value(&self, value: BigInt, i: usize) -> Result<std::result::Result<FormCertificate, Hh1Rejection>> {
        if value.is_zero() {
            return Ok(Err(Hh1Rejection::ZeroValue(i)));
        }
        let mut rest = value.magnitude().clone();
        let mut s_part = Vec::new();
        for &p in &self.s {
            let pb = BigUint::from(p);
            let mut e = 0;
            while (&rest % &pb).is_zero() {
                rest /= &pb;
                e += 1;
            }
            if e > 0 {
                s_part.push((p, e));
            }
        }
        if rest.is_one() {
            return Ok(Err(Hh1Rejection::NoOutsidePrime(i)));
        }
        let certificate = match prime_certificate(&rest) {
            Ok(Some(c)) => c,
            Ok(None) => return Ok(Err(Hh1Rejection::NotPrime(i))),
            Err(Error::Uncertified(_)) => return Ok(Err(Hh1Rejection::Uncertified(i))),
            Err(e) => return Err(e),
        };
        let sign = if value.sign() == Sign::Minus { -1 } else { 1 };
        Ok(Ok(FormCertificate { value, sign, s_part, prime: rest, exponent: 1, certificate }))
    }

    fn residues_in(class: &(BigInt, BigInt), max: u64) -> Vec<BigInt> {
        let (r, m) = class;
        let lo = -BigInt::from(max);
        let hi = BigInt::from(max);
        let mut x = &lo + (r - &lo).mod_floor(m);
        let mut out = Vec::new();
        while x <= hi {
            out.push(x.clone());
            x += m;
        }
        out
    }
}

/// For each prime `p ∉ S` where some form could vanish identically on
/// `𝔽_p²∖{0}` (so `p ≤ Σ deg` or `p` divides a content), looks for a pair
/// with every value a p-unit.
fn check_s_free_values(forms: &[HomogeneousForm], s: &BTreeSet<u64>) -> Result<()> {
    let total: usize = forms.iter().map(HomogeneousForm::degree).sum();
    let mut primes: BTreeSet<u64> = primes_up_to(total as u64).into_iter().collect();
    for f in forms {
        for (p, _) in crate::arith::factor_integer(&f.content())? {
            primes.insert(p.to_u64().ok_or_else(|| Error::domain("content prime exceeds 64 bits"))?);
        }
    }
    for p in primes.into_iter().filter(|p| !s.contains(p)) {
        let pb = BigInt::from(p);
        let found = (0..p).any(|l| {
            (0..p).any(|m| {
                (l, m) != (0, 0)
                    && forms
                        .iter()
                        .all(|f| !(f.eval(&BigInt::from(l), &BigInt::from(m)) % &pb).is_zero())
            })
        });
        if !found {
            return Err(Error::Precondition(format!(
                "every pair makes some form divisible by {p}; add {p} to S"
            )));
        }
    }
    Ok(())
}

fn scan_segment(prob: &Hh1Problem, mus: &[BigInt], lambdas: &[BigInt]) -> Result<(Vec<Hh1Solution>, Hh1Stats)> {
    let mut hits = Vec::new();
    let mut stats = Hh1Stats { segments: 1, ..Default::default() };
    for mu in mus {
        for lambda in lambdas {
            if lambda.is_zero() && mu.is_zero() {
                continue;
            }
            stats.pairs += 1;
            match prob.check(lambda, mu)? {
                Ok(sol) => {
                    stats.hits += 1;
                    hits.push(sol);
                }
                Err(r) => stats.record(&r),
            }
        }
    }
    Ok((hits, stats))
}

/// Enumerates the box in the CRT classes of the finite targets, ordered by
/// `(μ, λ)`. Segments run in parallel and are merged in order, so hits and
/// statistics do not depend on scheduling.
pub fn hh1_search(prob: &Hh1Problem, bounds: &Hh1Bounds) -> Result<Hh1Report> {
    if bounds.segment == 0 {
        return Err(Error::domain("segment length must be positive"));
    }
    let lambdas = Hh1Problem::residues_in(&prob.lambda_class, bounds.lambda_max);
    let mus = Hh1Problem::residues_in(&prob.mu_class, bounds.mu_max);
    let segments: Vec<&[BigInt]> = mus.chunks(bounds.segment).collect();
    let mut report = Hh1Report { hits: Vec::new(), stats: Hh1Stats::default() };
    let wave = 4 * std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    for group in segments.chunks(wave) {
        let results = crate::par::map_collect(group, |mus| scan_segment(prob, mus, &lambdas));
        for r in results {
            let (hits, stats) = r?;
            report.hits.extend(hits);
            report.stats.merge(&stats);
            if bounds.max_hits.is_some_and(|m| report.hits.len() >= m) {
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// Re-derives every condition for `sol` and checks its certificates.
pub fn verify_hh1_solution(prob: &Hh1Problem, sol: &Hh1Solution) -> bool {
    let Ok(Ok(fresh)) = prob.check(&sol.lambda, &sol.mu) else {
        return false;
    };
    if fresh != *sol || sol.forms.len() != prob.forms.len() {
        return false;
    }
    sol.forms.iter().zip(&prob.forms).all(|(c, f)| {
        let mut prod = BigInt::from(c.sign) * BigInt::from(c.prime.clone());
        for &(p, e) in &c.s_part {
            if !prob.s.contains(&p) {
                return false;
            }
            prod *= pow_big(&BigInt::from(p), e);
        }
        c.exponent == 1
            && !prob.s.iter().any(|&p| (&c.prime % BigUint::from(p)).is_zero())
            && c.certificate.verify(&c.prime)
            && prod == c.value
            && c.value == f.eval(&sol.lambda, &sol.mu)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    fn sum_of_squares() -> HomogeneousForm {
        HomogeneousForm::from_ints(&[1, 0, 1]).unwrap()
    }

    fn trial_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    /// Strips 2s by hand and trial-divides the rest.
    fn oracle_hit(l: i64, m: i64) -> bool {
        let mut v = (l * l + m * m) as u64;
        if v == 0 {
            return false;
        }
        while v % 2 == 0 {
            v /= 2;
        }
        trial_prime(v)
    }

    #[test]
    fn sum_of_squares_small_box() {
        let prob = Hh1Problem::new(vec![sum_of_squares()], [2], vec![]).unwrap();
        let rep = hh1_search(&prob, &Hh1Bounds::new(20, 20)).unwrap();
        let got: Vec<(i64, i64)> = rep
            .hits
            .iter()
            .map(|h| (h.lambda.to_i64().unwrap(), h.mu.to_i64().unwrap()))
            .collect();
        let mut want = Vec::new();
        for m in -20..=20i64 {
            for l in -20..=20i64 {
                if oracle_hit(l, m) {
                    want.push((l, m));
                }
            }
        }
        assert_eq!(got, want);
        assert!(got.contains(&(1, 4)));
        let h = rep.hits.iter().find(|h| h.lambda == BigInt::from(1) && h.mu == BigInt::from(4)).unwrap();
        assert_eq!(h.forms[0].prime, BigUint::from(17u32));
        assert!(rep.hits.iter().all(|h| verify_hh1_solution(&prob, h)));
        assert_eq!(rep.stats.pairs, 41 * 41 - 1);
        assert_eq!(rep.stats.hits as usize, want.len());
    }

    #[test]
    fn two_two_is_rejected() {
        let prob = Hh1Problem::new(vec![sum_of_squares()], [2], vec![]).unwrap();
        let r = prob.check(&BigInt::from(2), &BigInt::from(2)).unwrap();
        assert_eq!(r, Err(Hh1Rejection::NoOutsidePrime(0)));
        let r = prob.check(&BigInt::from(3), &BigInt::from(4)).unwrap();
        assert_eq!(r, Err(Hh1Rejection::NotPrime(0)));
    }

    #[test]
    fn cubic_with_targets() {
        let f = HomogeneousForm::from_ints(&[-2, 0, 0, 1]).unwrap();
        let targets = vec![
            Hh1Target::Finite { p: 3, lambda: rat_int(1), mu: rat_int(1), precision: 2 },
            Hh1Target::Real { lambda: rat_int(5), mu: rat_int(4), eps: rat(1, 10) },
        ];
        let prob = Hh1Problem::new(vec![f.clone()], [2], targets).unwrap();
        let mut b = Hh1Bounds::new(300, 300);
        b.segment = 7;
        let rep = hh1_search(&prob, &b).unwrap();
        assert!(!rep.hits.is_empty());
        for h in &rep.hits {
            assert!(verify_hh1_solution(&prob, h));
            let (l, m) = (h.lambda.to_i64().unwrap(), h.mu.to_i64().unwrap());
            assert_eq!((l - 1).rem_euclid(9), 0);
            assert_eq!((m - 1).rem_euclid(9), 0);
            assert!(5 * l + 4 * m > 0);
            let cross = (4 * l - 5 * m) as f64;
            let d = cross.abs() / (((l * l + m * m) as f64).sqrt() * 41f64.sqrt());
            assert!(d <= 0.1 + 1e-12);
            let v = l.pow(3) - 2 * m.pow(3);
            let mut w = v.unsigned_abs();
            for p in [2u64, 3] {
                while w % p == 0 {
                    w /= p;
                }
            }
            assert!(trial_prime(w));
        }
        b.segment = 64;
        let again = hh1_search(&prob, &b).unwrap();
        assert_eq!(again.hits, rep.hits);
        assert_eq!(again.stats.hits, rep.stats.hits);
        assert_eq!(again.stats.pairs, rep.stats.pairs);
    }

    #[test]
    fn preconditions_and_infeasibility() {
        let real0 = vec![Hh1Target::Real { lambda: rat_int(0), mu: rat_int(0), eps: rat(1, 2) }];
        assert!(matches!(Hh1Problem::new(vec![sum_of_squares()], [2], real0), Err(Error::Precondition(_))));
        // 2λ³ + λ²μ + 3λμ² + 2μ³ is even on all of 𝔽₂² ∖ {0}.
        let g = HomogeneousForm::from_ints(&[2, 3, 1, 2]).unwrap();
        assert!(matches!(Hh1Problem::new(vec![g.clone()], [], vec![]), Err(Error::Precondition(_))));
        assert!(Hh1Problem::new(vec![g], [2], vec![]).is_ok());
        let clash = vec![
            Hh1Target::Finite { p: 5, lambda: rat_int(1), mu: rat_int(0), precision: 1 },
            Hh1Target::Finite { p: 5, lambda: rat_int(2), mu: rat_int(0), precision: 2 },
        ];
        assert!(matches!(
            Hh1Problem::new(vec![sum_of_squares()], [2], clash),
            Err(Error::InfeasibleAtPrecision(_))
        ));
    }

    #[test]
    fn max_hits_stops_at_segment_boundary() {
        let prob = Hh1Problem::new(vec![sum_of_squares()], [2], vec![]).unwrap();
        let mut b = Hh1Bounds::new(5, 1000);
        b.max_hits = Some(10);
        b.segment = 3;
        let rep = hh1_search(&prob, &b).unwrap();
        assert!(rep.hits.len() >= 10);
        let full = hh1_search(&prob, &Hh1Bounds::new(5, 1000)).unwrap();
        assert_eq!(rep.hits[..], full.hits[..rep.hits.len()]);
    }
}
