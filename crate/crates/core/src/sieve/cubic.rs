//! Integral cubic forms `f(x, y) = c^q N_{K/ℚ}(b₁((a₂ − a₁)x + y/b₂))` over
//! a cubic field with one real place, and scans for `y·f(x, y)` free of
//! primes `≡ 1 (mod q)` outside S.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::factor::{pow_mod, prime_certificate};
use crate::arith::{factor_integer, is_prime_u64, pow_big, valuation_unchecked, PrimalityCertificate, Rational};
use crate::error::{Error, Result};
use crate::field::NumberFieldAbs;
use crate::poly::irreducible::lagrange;
use crate::poly::{discriminant, PolyQ};

/// `Σ c_j x^j y^{d−j}`.
pub fn eval_binary(coeffs: &[BigInt], x: &BigInt, y: &BigInt) -> BigInt {
    let d = coeffs.len() - 1;
    let mut acc = BigInt::zero();
    let mut xp = BigInt::one();
    for (j, c) in coeffs.iter().enumerate() {
        if !c.is_zero() {
            acc += c * &xp * pow_big(y, (d - j) as u32);
        }
        xp *= x;
    }
    acc
}

#[derive(Clone, Debug, Serialize)]
pub struct CubicForm {
    #[serde(serialize_with = "crate::ser::display")]
    pub c: BigInt,
    pub q: u64,
    /// `coeffs[j]` multiplies `x^j y^{3−j}`.
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub coeffs: Vec<BigInt>,
    #[serde(serialize_with = "crate::ser::display")]
    pub discriminant: BigInt,
    pub real_places: usize,
    #[serde(skip)]
    field: NumberFieldAbs,
    #[serde(skip)]
    a1: PolyQ,
    #[serde(skip)]
    a2: Rational,
    #[serde(skip)]
    b1: PolyQ,
    #[serde(skip)]
    b2: Rational,
}

fn binary_cubic_discriminant(f: &[BigInt]) -> BigInt {
    let (d, c, b, a) = (&f[0], &f[1], &f[2], &f[3]);
    b * b * c * c - 4 * a * c * c * c - 4 * b * b * b * d - 27 * a * a * d * d + 18 * a * b * c * d
}

/// Builds `f` with the smallest `|c|` making every coefficient integral, the
/// sign of `c` chosen so the `x³` coefficient is positive.
pub fn cubic_form_build(field: &NumberFieldAbs, q: u64, a1: &PolyQ, a2: &Rational, b1: &PolyQ, b2: &Rational) -> Result<CubicForm> {
    if field.degree() != 3 {
        return Err(Error::domain(format!("field has degree {}, not 3", field.degree())));
    }
    let real_places = field.real_place_count();
    if real_places != 1 {
        return Err(Error::Precondition(format!("field has {real_places} real places, not 1")));
    }
    if q < 7 || !is_prime_u64(q) {
        return Err(Error::domain(format!("q = {q} must be a prime ≥ 7")));
    }
    if b2.is_zero() {
        return Err(Error::domain("b₂ must be nonzero"));
    }
    let (a1, b1) = (field.reduce(a1), field.reduce(b1));
    if b1.is_zero() {
        return Err(Error::domain("b₁ must be nonzero"));
    }
    let u = field.mul(&b1, &(&PolyQ::constant(a2.clone()) - &a1));
    if u.is_zero() {
        return Err(Error::domain("a₂ − a₁ must be nonzero"));
    }
    let w = b1.scale(&b2.recip());
    let xs: Vec<Rational> = (0..4).map(|i| Rational::from_integer(BigInt::from(i))).collect();
    let ys: Vec<Rational> = xs.iter().map(|x| field.norm(&(&u.scale(x) + &w))).collect();
    let g = lagrange(&xs, &ys);
    let rational: Vec<Rational> = (0..4).map(|j| g.coeff(j)).collect();
    let mut c = BigInt::one();
    let den = rational.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    for (p, _) in factor_integer(&den)? {
        let p = p.to_u64().ok_or_else(|| Error::domain("denominator prime exceeds 64 bits"))?;
        let worst = rational
            .iter()
            .filter(|r| !r.is_zero())
            .map(|r| -valuation_unchecked(r, p).finite().unwrap())
            .max()
            .unwrap_or(0);
        let e = (worst + q as i64 - 1).div_euclid(q as i64);
        c *= pow_big(&BigInt::from(p), e as u32);
    }
    if rational[3].is_negative() {
        c = -c;
    }
    let cq = Rational::from_integer(pow_big(&c, q as u32));
    let coeffs: Vec<BigInt> = rational
        .iter()
        .map(|r| {
            let v = r * &cq;
            debug_assert!(v.is_integer());
            v.to_integer()
        })
        .collect();
    let disc = discriminant(&PolyQ::from_bigints(&coeffs))?;
    Ok(CubicForm {
        c,
        q,
        discriminant: disc.to_integer(),
        coeffs,
        real_places,
        field: field.clone(),
        a1,
        a2: a2.clone(),
        b1,
        b2: b2.clone(),
    })
}

impl CubicForm {
    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        eval_binary(&self.coeffs, x, y)
    }

    pub fn eval_rat(&self, x: &Rational, y: &Rational) -> Rational {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| Rational::from_integer(c.clone()) * x.pow(j as i32) * y.pow(3 - j as i32))
            .sum()
    }

    /// With `μ = λ b₂(τ − a₂)`: `f(λ, μ)/λ³ = c^q N(b₁(τ − a₁))`.
    pub fn identity_holds(&self, tau: &Rational, lambda: &Rational) -> bool {
        if lambda.is_zero() {
            return false;
        }
        let mu = lambda * &self.b2 * (tau - &self.a2);
        let lhs = self.eval_rat(lambda, &mu) / lambda.pow(3);
        let elt = self.field.mul(&self.b1, &(&PolyQ::constant(tau.clone()) - &self.a1));
        let rhs = Rational::from_integer(pow_big(&self.c, self.q as u32)) * self.field.norm(&elt);
        lhs == rhs
    }

    pub fn discriminant_formula(&self) -> BigInt {
        binary_cubic_discriminant(&self.coeffs)
    }
}

/// Box `1 ≤ x ≤ x_max`, `1 ≤ y ≤ y_max`, optionally restricted to residue
/// classes `(r, m)`.
#[derive(Clone, Debug, Serialize)]
pub struct ScanBounds {
    pub x_max: u64,
    pub y_max: u64,
    pub x_class: Option<(u64, u64)>,
    pub y_class: Option<(u64, u64)>,
    /// Stop after the first row that brings the total to this many hits.
    pub max_hits: Option<usize>,
}

impl ScanBounds {
    pub fn new(x_max: u64, y_max: u64) -> Self {
        ScanBounds { x_max, y_max, x_class: None, y_class: None, max_hits: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanFactor {
    #[serde(serialize_with = "crate::ser::display")]
    pub prime: BigUint,
    pub exponent: u32,
    pub in_s: bool,
    pub residue_mod_q: u64,
    /// For a prime outside S: some `r` with `r^q ≡ 2 (mod p)`.
    pub qth_root_of_two: Option<u64>,
    pub certificate: PrimalityCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScanHit {
    pub x: u64,
    pub y: u64,
    /// `y·f(x, y)`.
    #[serde(serialize_with = "crate::ser::display")]
    pub value: BigInt,
    pub factors: Vec<ScanFactor>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    pub rows: u64,
    pub pairs: u64,
    pub zero_value: u64,
    /// Pairs with a prime `≡ 1 (mod q)` outside S.
    pub forbidden: u64,
    pub hits: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub hits: Vec<ScanHit>,
    pub stats: ScanStats,
}

/// `2^{q⁻¹ mod (p−1)}`, which is a q-th root of 2 whenever `q ∤ p − 1`.
fn qth_root_of_two(p: u64, q: u64) -> Option<u64> {
    if p == 2 {
        return Some(0);
    }
    let inv = crate::arith::factor::inv_mod_u64(q % (p - 1), p - 1)?;
    let r = pow_mod(2, inv, p);
    (pow_mod(r, q, p) == 2 % p).then_some(r)
}

/// `Ok(None)` when some prime outside S is `≡ 1 (mod q)` or the value is 0.
pub fn forbidden_class_check(f: &[BigInt], s: &BTreeSet<u64>, q: u64, x: u64, y: u64) -> Result<Option<ScanHit>> {
    if x == 0 || y == 0 {
        return Err(Error::domain("x₀ and y₀ must be positive"));
    }
    let value = BigInt::from(y) * eval_binary(f, &BigInt::from(x), &BigInt::from(y));
    if value.is_zero() {
        return Ok(None);
    }
    let mut factors = Vec::new();
    for (p, e) in factor_integer(&value)? {
        let in_s = p.to_u64().is_some_and(|p| s.contains(&p));
        let residue = (&p % q).to_u64().unwrap();
        let root = match p.to_u64() {
            Some(pu) if !in_s => {
                if residue == 1 {
                    return Ok(None);
                }
                Some(qth_root_of_two(pu, q).ok_or_else(|| Error::Internal(format!("no {q}-th root of 2 mod {pu}")))?)
            }
            None if !in_s && residue == 1 => return Ok(None),
            _ => None,
        };
        let certificate = prime_certificate(&p)?.ok_or_else(|| Error::Internal(format!("factor {p} is not prime")))?;
        factors.push(ScanFactor { prime: p, exponent: e, in_s, residue_mod_q: residue, qth_root_of_two: root, certificate });
    }
    Ok(Some(ScanHit { x, y, value, factors }))
}

fn class_members(max: u64, class: Option<(u64, u64)>) -> Result<Vec<u64>> {
    match class {
        None => Ok((1..=max).collect()),
        Some((_, 0)) => Err(Error::domain("modulus must be positive")),
        Some((r, m)) => Ok((1..=max).filter(|v| v % m == r % m).collect()),
    }
}

/// Scans the box row by row in `y`, then `x`; rows run in parallel and are
/// merged in order.
pub fn forbidden_class_scan(f: &[BigInt], s: &BTreeSet<u64>, q: u64, bounds: &ScanBounds) -> Result<ScanReport> {
    if !is_prime_u64(q) {
        return Err(Error::domain(format!("{q} is not prime")));
    }
    if f.len() < 2 {
        return Err(Error::domain("form must have positive degree"));
    }
    let xs = class_members(bounds.x_max, bounds.x_class)?;
    let ys = class_members(bounds.y_max, bounds.y_class)?;
    let mut report = ScanReport { hits: Vec::new(), stats: ScanStats::default() };
    let wave = 4 * std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    for group in ys.chunks(wave) {
        let rows = crate::par::map_collect(group, |&y| -> Result<(Vec<ScanHit>, ScanStats)> {
            let mut hits = Vec::new();
            let mut st = ScanStats { rows: 1, ..Default::default() };
            for &x in &xs {
                st.pairs += 1;
                match forbidden_class_check(f, s, q, x, y)? {
                    Some(h) => {
                        st.hits += 1;
                        hits.push(h);
                    }
                    None if eval_binary(f, &BigInt::from(x), &BigInt::from(y)).is_zero() => st.zero_value += 1,
                    None => st.forbidden += 1,
                }
            }
            Ok((hits, st))
        });
        for r in rows {
            let (hits, st) = r?;
            report.hits.extend(hits);
            report.stats.rows += st.rows;
            report.stats.pairs += st.pairs;
            report.stats.zero_value += st.zero_value;
            report.stats.forbidden += st.forbidden;
            report.stats.hits += st.hits;
            if bounds.max_hits.is_some_and(|m| report.hits.len() >= m) {
                return Ok(report);
            }
        }
    }
    Ok(report)
}

/// Re-checks a hit from its own data: the value, the factorization, every
/// certificate, the residues and the q-th roots of 2.
pub fn verify_scan_hit(f: &[BigInt], s: &BTreeSet<u64>, q: u64, hit: &ScanHit) -> bool {
    if hit.x == 0 || hit.y == 0 {
        return false;
    }
    let value = BigInt::from(hit.y) * eval_binary(f, &BigInt::from(hit.x), &BigInt::from(hit.y));
    if value != hit.value || value.is_zero() {
        return false;
    }
    let mut prod = BigUint::one();
    for fac in &hit.factors {
        if !fac.certificate.verify(&fac.prime) || (&fac.prime % q).to_u64() != Some(fac.residue_mod_q) {
            return false;
        }
        let in_s = fac.prime.to_u64().is_some_and(|p| s.contains(&p));
        if in_s != fac.in_s {
            return false;
        }
        if !in_s {
            if fac.residue_mod_q == 1 {
                return false;
            }
            let (Some(p), Some(r)) = (fac.prime.to_u64(), fac.qth_root_of_two) else {
                return false;
            };
            if pow_mod(r % p, q, p) != 2 % p {
                return false;
            }
        }
        prod *= fac.prime.pow(fac.exponent);
    }
    prod == *value.magnitude()
}
