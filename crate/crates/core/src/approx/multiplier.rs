//! Norms `t = N_{L/ℚ}(x)` close to given local norms whose prime support
//! outside S ∪ {v0} consists of primes splitting completely in L.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{crt_class, integral_outside, nearest_in_class, Condition};
use crate::arith::{factor, pow_big, valuation_unchecked, Rational};
use crate::error::{Error, Result};
use crate::field::{NumberFieldAbs, RelativeExtension};
use crate::galois::{cycle_type_scan, find_split_prime};
use crate::local::{local_norm_test_element, NormVerdict, PlaceOfQ, Precision};
use crate::poly::{resultant, PolyQ};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormTarget {
    pub place: PlaceOfQ,
    #[serde(serialize_with = "crate::ser::display")]
    pub t: Rational,
    #[serde(skip)]
    pub precision: Precision,
}

impl NormTarget {
    fn condition(&self) -> Condition {
        Condition {
            place: self.place,
            t: self.t.clone(),
            precision: self.precision.clone(),
        }
    }
}

const GALOIS_SCAN_BOUND: u64 = 2000;
const SPLIT_PRIME_BOUND: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct NormMultiplierProblem {
    field: NumberFieldAbs,
    s: BTreeSet<PlaceOfQ>,
    targets: Vec<NormTarget>,
    v0: u64,
}

impl NormMultiplierProblem {
    /// `field` must be defined by a monic integral polynomial and pass a
    /// Galois sanity scan (every Frobenius type homogeneous). S gains the
    /// real place, the target places and the primes dividing the
    /// discriminant; v0 defaults to the smallest completely split prime
    /// outside S. Every target must not be a NotNorm locally.
    pub fn new(field: NumberFieldAbs, s: impl IntoIterator<Item = PlaceOfQ>, targets: Vec<NormTarget>, v0: Option<u64>) -> Result<Self> {
        if !field.is_integral() {
            return Err(Error::domain("the defining polynomial must have integer coefficients"));
        }
        let profile = cycle_type_scan(field.poly(), GALOIS_SCAN_BOUND)?;
        if let Some((t, r)) = profile.types.iter().find(|(t, _)| !t.is_homogeneous()) {
            return Err(Error::domain(format!(
                "not Galois: Frobenius type {t} at {} cannot occur in a Galois extension",
                r.first_prime
            )));
        }
        let mut s: BTreeSet<PlaceOfQ> = s.into_iter().collect();
        s.insert(PlaceOfQ::Real);
        for p in field.bad_primes()? {
            s.insert(PlaceOfQ::Finite(p));
        }
        let rel = over_q(&field)?;
        let mut seen = BTreeSet::new();
        for t in &targets {
            if !seen.insert(t.place) {
                return Err(Error::domain(format!("two targets at {}", t.place)));
            }
            if t.t.is_zero() {
                return Err(Error::domain("targets must be nonzero"));
            }
            match (&t.precision, t.place) {
                (Precision::Adic(n), PlaceOfQ::Finite(_)) if *n >= 1 => {}
                (Precision::Real(e), PlaceOfQ::Real) if e.is_positive() => {}
                _ => return Err(Error::domain(format!("bad precision at {}", t.place))),
            }
            let verdict = local_norm_test_element(&PolyQ::constant(t.t.clone()), &rel, t.place, None)?;
            if verdict == NormVerdict::NotNorm {
                return Err(Error::HypothesisFailed {
                    which: "local norm".into(),
                    detail: format!("t = {} is not a local norm at {}", t.t, t.place),
                });
            }
            s.insert(t.place);
        }
        let s_primes: BTreeSet<u64> = s.iter().filter_map(|v| v.prime()).collect();
        let v0 = match v0 {
            Some(p) => {
                PlaceOfQ::finite(p)?;
                if s_primes.contains(&p) {
                    return Err(Error::domain(format!("v0 = {p} lies in S")));
                }
                if field.is_bad_prime(p) || !field.splits_completely(p)? {
                    return Err(Error::domain(format!("v0 = {p} does not split completely")));
                }
                p
            }
            None => find_split_prime(std::slice::from_ref(&field), &s_primes, SPLIT_PRIME_BOUND)?,
        };
        Ok(NormMultiplierProblem { field, s, targets, v0 })
    }

    pub fn field(&self) -> &NumberFieldAbs {
        &self.field
    }

    pub fn s(&self) -> &BTreeSet<PlaceOfQ> {
        &self.s
    }

    pub fn targets(&self) -> &[NormTarget] {
        &self.targets
    }

    pub fn v0(&self) -> u64 {
        self.v0
    }

    fn allowed_primes(&self) -> BTreeSet<u64> {
        let mut out: BTreeSet<u64> = self.s.iter().filter_map(|v| v.prime()).collect();
        out.insert(self.v0);
        out
    }
}

fn over_q(field: &NumberFieldAbs) -> Result<RelativeExtension> {
    let q = NumberFieldAbs::from_ints(&[0, 1])?;
    RelativeExtension::new(q, field.poly().coeffs().iter().map(|c| PolyQ::constant(c.clone())).collect())
}

/// Bounds on the enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SearchBox {
    /// Coefficient bound for local preimages.
    pub local: i64,
    /// Largest power of p allowed in a local preimage's denominator.
    pub local_denominator: u32,
    /// Offsets per coordinate in the global CRT class.
    pub global: i64,
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            local: 12,
            local_denominator: 2,
            global: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitAttestation {
    pub prime: u64,
    pub exponent: i64,
    pub residue_degrees: Vec<usize>,
    pub splits_completely: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Closeness {
    pub place: PlaceOfQ,
    #[serde(serialize_with = "crate::ser::display")]
    pub target: Rational,
    /// `v_p(t − t_v)` at a finite place, `|t − t_v|` at the real place.
    pub achieved: String,
    pub required: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormCertificate {
    /// Coordinates of x in the basis 1, θ, …, θ^{n−1}.
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub x: Vec<Rational>,
    #[serde(serialize_with = "crate::ser::display")]
    pub t: Rational,
    /// `(prime, exponent)` pairs of t.
    pub factorization: Vec<(String, i64)>,
    pub v0: u64,
    pub splits: Vec<SplitAttestation>,
    pub closeness: Vec<Closeness>,
    pub candidates_tried: u64,
}

/// A norm preimage of `t_p` up to `p^N`: `x = y / p^d`.
fn local_preimage(field: &NumberFieldAbs, p: u64, t: &Rational, n: i64, bx: &SearchBox) -> Option<(Vec<BigInt>, u32)> {
    let deg = field.degree();
    let pq = Rational::from_integer(BigInt::from(p));
    for d in 0..=bx.local_denominator {
        let scale = crate::arith::pow_rat(&pq, -(d as i64) * deg as i64);
        for b in 1..=bx.local {
            for y in box_shell(deg, b) {
                let x = PolyQ::from_ints(&y);
                let nm = &field.norm(&x) * &scale;
                if !nm.is_zero() && valuation_unchecked(&(&nm - t), p).at_least(n) {
                    return Some((y.into_iter().map(BigInt::from).collect(), d));
                }
            }
        }
    }
    None
}

/// Integer vectors with sup norm exactly `b`, in lexicographic order.
fn box_shell(n: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-b; n];
    loop {
        if cur.iter().any(|c| c.abs() == b) {
            out.push(cur.clone());
        }
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < b {
                cur[i] += 1;
                break;
            }
            cur[i] = -b;
        }
    }
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// A rational x with `|N(x) − t| ≤ ε/2`: a small element whose norm has the
/// sign of t, rescaled by an approximate n-th root.
fn real_preimage(field: &NumberFieldAbs, t: &Rational, eps: &Rational, bx: &SearchBox) -> Option<Vec<Rational>> {
    let deg = field.degree();
    let half = eps / Rational::from_integer(2.into());
    for b in 1..=bx.local {
        for y in box_shell(deg, b) {
            let yp = PolyQ::from_ints(&y);
            let ny = field.norm(&yp);
            if ny.is_zero() || ny.is_negative() != t.is_negative() {
                continue;
            }
            let ratio = to_f64(&(t / &ny));
            let c = ratio.powf(1.0 / deg as f64);
            for bits in [20u32, 40, 60, 90] {
                let Some(cr) = Rational::from_float(c) else { break };
                let den = BigInt::one() << bits;
                let cr = Rational::new((cr * Rational::from_integer(den.clone())).round().to_integer(), den);
                let x = yp.scale(&cr);
                if (&field.norm(&x) - t).abs() <= half {
                    return Some((0..deg).map(|i| x.coeff(i)).collect());
                }
            }
        }
    }
    None
}

/// Enumerates `x` with coordinates `λ_j / (D · v0^k)` in the CRT classes of
/// the local preimages and accepts the first whose norm meets every target
/// and whose prime support outside S ∪ {v0} splits completely.
pub fn norm_multiplier_solve(prob: &NormMultiplierProblem, bx: &SearchBox) -> Result<NormCertificate> {
    let field = &prob.field;
    let n = field.degree();
    // Local data per coordinate.
    let mut coord_conds: Vec<Vec<Condition>> = vec![Vec::new(); n];
    let mut real: Option<(Vec<Rational>, Rational)> = None;
    for t in &prob.targets {
        match (t.place, &t.precision) {
            (PlaceOfQ::Finite(p), Precision::Adic(nv)) => {
                let (y, d) = local_preimage(field, p, &t.t, *nv, bx).ok_or_else(|| {
                    Error::NoWitness(format!("no norm preimage of {} at {p} within the local box", t.t))
                })?;
                let pd = Rational::from_integer(pow_big(&BigInt::from(p), d));
                for (j, yj) in y.iter().enumerate() {
                    coord_conds[j].push(Condition {
                        place: t.place,
                        t: Rational::from_integer(yj.clone()) / &pd,
                        precision: Precision::Adic(nv + (n as i64 - 1) * d as i64),
                    });
                }
            }
            (PlaceOfQ::Real, Precision::Real(eps)) => {
                let x = real_preimage(field, &t.t, eps, bx)
                    .ok_or_else(|| Error::NoWitness(format!("no real preimage of {}", t.t)))?;
                real = Some((x, eps.clone()));
            }
            _ => return Err(Error::Internal("target precision does not match its place".into())),
        }
    }
    let v0 = BigInt::from(prob.v0);
    let classes: Vec<(BigInt, BigInt, BigInt)> = coord_conds.iter().map(|c| crt_class(c)).collect::<Result<_>>()?;
    let height = field
        .poly()
        .coeffs()
        .iter()
        .map(|c| c.abs())
        .fold(Rational::one(), |a, b| a + b);
    let mut tried = 0u64;
    let mut delta = match &real {
        Some((x, eps)) => {
            let size = x.iter().map(|c| c.abs()).fold(Rational::one(), |a, b| a.max(b)) + &height;
            let mut d = eps / Rational::from_integer(BigInt::from(8 * n as i64));
            for _ in 0..n {
                d /= &size;
            }
            Some(d)
        }
        None => None,
    };
    for _round in 0..8 {
        // k: smallest power of v0 making every coordinate window hold the box.
        let mut k = 0u32;
        if let Some(dl) = &delta {
            loop {
                let scale = Rational::from_integer(pow_big(&v0, k));
                let ok = classes.iter().all(|(_, m, den)| {
                    &(dl * Rational::from_integer(den.clone()) * &scale * Rational::from_integer(2.into()))
                        >= &Rational::from_integer(m * BigInt::from(2 * bx.global + 1))
                });
                if ok {
                    break;
                }
                k += 1;
            }
        }
        let vk = pow_big(&v0, k);
        let centers: Vec<BigInt> = classes
            .iter()
            .enumerate()
            .map(|(j, (r0, m, den))| {
                let d = den * &vk;
                let class = {
                    use num_integer::Integer;
                    (r0 * &vk).mod_floor(m)
                };
                let aim = match &real {
                    Some((x, _)) => &x[j] * Rational::from_integer(d),
                    None => Rational::zero(),
                };
                nearest_in_class(&aim, &class, m)
            })
            .collect();
        for offsets in offsets_by_size(n, bx.global) {
            tried += 1;
            let coords: Vec<Rational> = (0..n)
                .map(|j| {
                    let (_, m, den) = &classes[j];
                    Rational::new(&centers[j] + m * BigInt::from(offsets[j]), den * &vk)
                })
                .collect();
            if let Some(cert) = certify(prob, &coords, tried)? {
                return Ok(cert);
            }
        }
        match &mut delta {
            Some(d) => *d /= Rational::from_integer(4.into()),
            None => break,
        }
    }
    Err(Error::NoWitness(format!("no certified norm after {tried} candidates")))
}

/// Offset vectors in `[-b, b]^n`, ordered by sup norm then lexicographically.
fn offsets_by_size(n: usize, b: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0; n]];
    for r in 1..=b {
        out.extend(box_shell(n, r));
    }
    out
}

fn certify(prob: &NormMultiplierProblem, x: &[Rational], tried: u64) -> Result<Option<NormCertificate>> {
    let field = &prob.field;
    let allowed = prob.allowed_primes();
    if !x.iter().all(|c| integral_outside(c, &allowed)) {
        return Ok(None);
    }
    let xp = PolyQ::new(x.to_vec());
    if xp.is_zero() {
        return Ok(None);
    }
    let t = field.norm(&xp);
    if t.is_zero() || !prob.targets.iter().all(|tg| tg.condition().holds(&t)) {
        return Ok(None);
    }
    let fac = factor(&t)?;
    let mut splits = Vec::new();
    for (p, e) in &fac.factors {
        let p = p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?;
        if allowed.contains(&p) {
            continue;
        }
        if field.is_bad_prime(p) {
            return Ok(None);
        }
        let places = field.places_above(p)?;
        let att = SplitAttestation {
            prime: p,
            exponent: *e,
            residue_degrees: places.iter().map(|w| w.f).collect(),
            splits_completely: places.iter().all(|w| w.f == 1),
        };
        if !att.splits_completely {
            return Ok(None);
        }
        splits.push(att);
    }
    let closeness = prob
        .targets
        .iter()
        .map(|tg| match (&tg.precision, tg.place) {
            (Precision::Adic(n), PlaceOfQ::Finite(p)) => Closeness {
                place: tg.place,
                target: tg.t.clone(),
                achieved: valuation_unchecked(&(&t - &tg.t), p).to_string(),
                required: format!(">= {n}"),
            },
            (Precision::Real(e), _) => Closeness {
                place: tg.place,
                target: tg.t.clone(),
                achieved: (&t - &tg.t).abs().to_string(),
                required: format!("<= {e}"),
            },
            _ => unreachable!("validated in the constructor"),
        })
        .collect();
    Ok(Some(NormCertificate {
        x: x.to_vec(),
        t,
        factorization: fac.factors.iter().map(|(p, e)| (p.to_string(), *e)).collect(),
        v0: prob.v0,
        splits,
        closeness,
        candidates_tried: tried,
    }))
}

/// Recomputes t as `Res(P, x)`, the factorization, the splitting of every
/// certificate prime, integrality of x outside S ∪ {v0} and closeness.
pub fn verify_certificate(prob: &NormMultiplierProblem, cert: &NormCertificate) -> Result<bool> {
    let field = &prob.field;
    let xp = PolyQ::new(cert.x.clone());
    if resultant(field.poly(), &xp) != cert.t {
        return Ok(false);
    }
    let mut prod = Rational::one();
    let mut listed = BTreeMap::new();
    for (p, e) in &cert.factorization {
        let pb: BigInt = p.parse().map_err(|_| Error::domain("bad prime in certificate"))?;
        prod *= crate::arith::pow_rat(&Rational::from_integer(pb.clone()), *e);
        listed.insert(pb, *e);
    }
    if cert.t.is_negative() {
        prod = -prod;
    }
    if prod != cert.t {
        return Ok(false);
    }
    let allowed = prob.allowed_primes();
    for (p, _) in &listed {
        let p = p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?;
        if allowed.contains(&p) {
            continue;
        }
        if field.is_bad_prime(p) || !field.splits_completely(p)? || !cert.splits.iter().any(|a| a.prime == p) {
            return Ok(false);
        }
    }
    Ok(cert.x.iter().all(|c| integral_outside(c, &allowed)) && prob.targets.iter().all(|tg| tg.condition().holds(&cert.t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};

    fn gauss() -> NumberFieldAbs {
        NumberFieldAbs::from_ints(&[1, 0, 1]).unwrap()
    }

    fn two_adic(t: i64, n: i64) -> NormTarget {
        NormTarget {
            place: PlaceOfQ::Finite(2),
            t: rat_int(t),
            precision: Precision::Adic(n),
        }
    }

    /// Sums of two squares a² + b² with |a|, |b| ≤ 20, t ≡ 2 mod 8, and
    /// every odd prime factor other than 5 congruent to 1 mod 4.
    fn oracle_norms() -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                let t = a * a + b * b;
                if t == 0 || (t - 2).rem_euclid(8) != 0 {
                    continue;
                }
                let mut m = t;
                while m % 2 == 0 {
                    m /= 2;
                }
                let mut ok = true;
                let mut p = 3;
                while m > 1 {
                    if m % p == 0 {
                        ok &= p == 5 || p % 4 == 1;
                        m /= p;
                    } else {
                        p += 2;
                    }
                }
                if ok {
                    out.insert(t);
                }
            }
        }
        out
    }

    #[test]
    fn gaussian_norm_near_two() {
        let prob = NormMultiplierProblem::new(gauss(), [], vec![two_adic(2, 3)], Some(5)).unwrap();
        let cert = norm_multiplier_solve(&prob, &SearchBox::default()).unwrap();
        assert!(verify_certificate(&prob, &cert).unwrap());
        assert!(cert.t.is_integer());
        let t = cert.t.to_integer().to_i64().unwrap();
        assert!(oracle_norms().contains(&t), "t = {t}");
        assert!(oracle_norms().contains(&50));
    }

    #[test]
    fn infeasible_and_bad_inputs() {
        assert!(matches!(
            NormMultiplierProblem::new(gauss(), [], vec![two_adic(-1, 3)], Some(5)),
            Err(Error::HypothesisFailed { .. })
        ));
        assert!(NormMultiplierProblem::new(gauss(), [], vec![two_adic(2, 3)], Some(7)).is_err());
        // x³ − 2 is not Galois.
        assert!(NormMultiplierProblem::new(NumberFieldAbs::from_ints(&[-2, 0, 0, 1]).unwrap(), [], vec![], None).is_err());
    }

    #[test]
    fn real_and_three_adic_targets() {
        for poly in [[1, 1, 1], [-2, 0, 1]] {
            let field = NumberFieldAbs::from_ints(&poly).unwrap();
            let prob = NormMultiplierProblem::new(
                field,
                [],
                vec![
                    NormTarget {
                        place: PlaceOfQ::Real,
                        t: rat(37, 5),
                        precision: Precision::Real(rat(1, 10)),
                    },
                    NormTarget {
                        place: PlaceOfQ::Finite(3),
                        t: rat_int(7),
                        precision: Precision::Adic(2),
                    },
                ],
                None,
            )
            .unwrap();
            let cert = norm_multiplier_solve(&prob, &SearchBox::default()).unwrap();
            assert!(verify_certificate(&prob, &cert).unwrap(), "{poly:?}");
            assert!((&cert.t - rat(37, 5)).abs() <= rat(1, 10));
        }
    }

    #[test]
    fn tampered_certificate_fails() {
        let prob = NormMultiplierProblem::new(gauss(), [], vec![two_adic(2, 3)], Some(5)).unwrap();
        let mut cert = norm_multiplier_solve(&prob, &SearchBox::default()).unwrap();
        cert.t += rat_int(8);
        assert!(!verify_certificate(&prob, &cert).unwrap());
    }
}
