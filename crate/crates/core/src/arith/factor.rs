//! Primality certification and integer factorization.
//!
//! Machine-word inputs use trial division by the primes below 1000 followed by
//! Brent's variant of Pollard rho; every prime reported is certified by a
//! Miller-Rabin base set that is deterministic below 3.3·10²⁴. Larger primes
//! need a Pocklington certificate, otherwise the caller gets
//! [`Error::Uncertified`] rather than a guess.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_integer::{Integer, Roots};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::cache;
use super::Rational;
use crate::error::{Error, Result};

const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Miller-Rabin with the first 13 prime bases is exact below this bound.
const MR_DETERMINISTIC_BOUND: &str = "3317044064679887385961981";

const RHO_BUDGET: u64 = 1 << 22;

fn small_primes() -> &'static [u64] {
    static CELL: OnceLock<Vec<u64>> = OnceLock::new();
    CELL.get_or_init(|| super::primes_up_to(1000))
}

fn mr_bound() -> &'static BigUint {
    static CELL: OnceLock<BigUint> = OnceLock::new();
    CELL.get_or_init(|| MR_DETERMINISTIC_BOUND.parse().unwrap())
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn inv_mod_u64(a: u64, m: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(m as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m as i128) as u64)
}

fn mr_round_u64(n: u64, d: u64, s: u32, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality for machine words.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &small_primes()[..25] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    if n < 101 * 101 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    MR_BASES[..12].iter().all(|&a| mr_round_u64(n, d, s, a))
}

fn mr_round_big(n: &BigUint, d: &BigUint, s: u64, a: u64) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let a = BigUint::from(a) % n;
    if a.is_zero() {
        return true;
    }
    let mut x = a.modpow(d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == nm1 {
            return true;
        }
    }
    false
}

/// How a prime was certified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimalityCertificate {
    /// Miller-Rabin on a base set that is exact below the stated bound.
    MillerRabin { bases: Vec<u64>, exact_below: String },
    /// Pocklington's criterion: `n - 1 = F·R` with `F² > n` fully factored.
    Pocklington { factors: Vec<PocklingtonStep> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PocklingtonStep {
    #[serde(serialize_with = "crate::ser::display")]
    pub prime: BigUint,
    pub exponent: u32,
    pub base: u64,
    pub certificate: Box<PrimalityCertificate>,
}

impl PrimalityCertificate {
    /// Re-checks the certificate against `n` from scratch.
    pub fn verify(&self, n: &BigUint) -> bool {
        match self {
            PrimalityCertificate::MillerRabin { .. } => {
                n < mr_bound() && miller_rabin_big(n, &MR_BASES)
            }
            PrimalityCertificate::Pocklington { factors } => {
                let one = BigUint::one();
                let nm1 = n - &one;
                let mut f = BigUint::one();
                for step in factors {
                    if !step.certificate.verify(&step.prime) {
                        return false;
                    }
                    f *= step.prime.pow(step.exponent);
                    let a = BigUint::from(step.base);
                    if a.modpow(&nm1, n) != one {
                        return false;
                    }
                    let t = a.modpow(&(&nm1 / &step.prime), n);
                    let g = if t.is_zero() { n.clone() } else { (t - &one).gcd(n) };
                    if !g.is_one() {
                        return false;
                    }
                }
                (&nm1 % &f).is_zero() && &f * &f > *n
            }
        }
    }
}

fn miller_rabin_big(n: &BigUint, bases: &[u64]) -> bool {
    let one = BigUint::one();
    if *n < BigUint::from(2u32) {
        return false;
    }
    for &p in small_primes().iter().take(25) {
        let pb = BigUint::from(p);
        if *n == pb {
            return true;
        }
        if (n % &pb).is_zero() {
            return false;
        }
    }
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    bases.iter().all(|&a| mr_round_big(n, &d, s, a))
}

/// `Ok(Some(cert))` for a certified prime, `Ok(None)` for a proven composite
/// (or unit), `Err(Uncertified)` when neither could be established.
pub fn prime_certificate(n: &BigUint) -> Result<Option<PrimalityCertificate>> {
    if let Some(small) = n.to_u64() {
        return Ok(is_prime_u64(small).then(|| PrimalityCertificate::MillerRabin {
            bases: MR_BASES[..12].to_vec(),
            exact_below: MR_DETERMINISTIC_BOUND.to_string(),
        }));
    }
    if !miller_rabin_big(n, &MR_BASES) {
        return Ok(None);
    }
    if n < mr_bound() {
        return Ok(Some(PrimalityCertificate::MillerRabin {
            bases: MR_BASES.to_vec(),
            exact_below: MR_DETERMINISTIC_BOUND.to_string(),
        }));
    }
    pocklington(n).map(Some)
}

fn pocklington(n: &BigUint) -> Result<PrimalityCertificate> {
    let one = BigUint::one();
    let nm1 = n - &one;
    // Partial factorization of n - 1: whatever trial division and a bounded
    // rho run can split off.
    let mut rest = nm1.clone();
    let mut found: Vec<(BigUint, u32)> = Vec::new();
    for &p in small_primes() {
        let pb = BigUint::from(p);
        let mut e = 0;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            e += 1;
        }
        if e > 0 {
            found.push((pb, e));
        }
    }
    let mut pending = vec![rest];
    while let Some(m) = pending.pop() {
        if m.is_one() {
            continue;
        }
        if miller_rabin_big(&m, &MR_BASES) {
            found.push((m, 1));
            continue;
        }
        if let Some(d) = rho_big(&m, RHO_BUDGET / 4) {
            let other = &m / &d;
            pending.push(d);
            pending.push(other);
        }
    }
    found.sort();
    let mut merged: Vec<(BigUint, u32)> = Vec::new();
    for (p, e) in found {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    // Use the largest-first subset of certified primes until F² > n.
    merged.sort_by(|a, b| b.0.cmp(&a.0));
    let mut f = BigUint::one();
    let mut steps = Vec::new();
    for (q, e) in merged {
        if &f * &f > *n {
            break;
        }
        let cert = match prime_certificate(&q) {
            Ok(Some(c)) => c,
            _ => continue,
        };
        let mut base = None;
        for a in 2u64..200 {
            let ab = BigUint::from(a);
            if ab.modpow(&nm1, n) != one {
                return Err(Error::Internal(format!("{n} passed Miller-Rabin but fails Fermat base {a}")));
            }
            let t = ab.modpow(&(&nm1 / &q), n);
            if !t.is_zero() && (t - &one).gcd(n).is_one() {
                base = Some(a);
                break;
            }
        }
        let Some(base) = base else { continue };
        f *= q.pow(e);
        steps.push(PocklingtonStep {
            prime: q,
            exponent: e,
            base,
            certificate: Box::new(cert),
        });
    }
    if &f * &f > *n {
        Ok(PrimalityCertificate::Pocklington { factors: steps })
    } else {
        Err(Error::Uncertified(n.to_string()))
    }
}

/// Certified primality test.
pub fn is_prime(n: &BigUint) -> Result<bool> {
    prime_certificate(n).map(|c| c.is_some())
}

fn rho_u64(n: u64) -> u64 {
    debug_assert!(n > 3 && n % 2 == 1 && !is_prime_u64(n));
    let r = n.sqrt();
    if r * r == n {
        return r;
    }
    let mut c = 1u64;
    loop {
        if let Some(d) = brent_u64(n, c) {
            return d;
        }
        c += 1;
    }
}

fn brent_u64(n: u64, c: u64) -> Option<u64> {
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let m = 128u64;
    let (mut y, mut r, mut q, mut g) = (2u64, 1u64, 1u64, 1u64);
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += m;
        }
        r *= 2;
        if r > 1 << 26 {
            return None;
        }
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn rho_big(n: &BigUint, budget: u64) -> Option<BigUint> {
    let root = n.sqrt();
    if &root * &root == *n {
        return Some(root);
    }
    for c in 1u64..=8 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut q = BigUint::one();
        let mut g = BigUint::one();
        let mut r = 1u64;
        let m = 128u64;
        let mut spent = 0u64;
        while g.is_one() && spent < budget {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (q * diff) % n;
                }
                g = q.gcd(n);
                k += m;
            }
            spent += r;
            r *= 2;
        }
        if g.is_one() {
            continue;
        }
        if g == *n {
            loop {
                ys = f(&ys);
                let diff = if x > ys { &x - &ys } else { &ys - &x };
                g = diff.gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if g != *n {
            return Some(g);
        }
    }
    None
}

/// Factorization of a positive machine word, primes ascending.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factor_u64 of zero");
    let mut out: Vec<(u64, u32)> = Vec::new();
    for &p in small_primes() {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut pending = vec![n];
        while let Some(m) = pending.pop() {
            if m == 1 {
                continue;
            }
            if m < 1_000_000 || is_prime_u64(m) {
                // Below 1000² anything left after trial division is prime.
                out.push((m, 1));
                continue;
            }
            let d = rho_u64(m);
            pending.push(d);
            pending.push(m / d);
        }
    }
    out.sort_unstable();
    let mut merged: Vec<(u64, u32)> = Vec::with_capacity(out.len());
    for (p, e) in out {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    merged
}

fn factor_biguint_uncached(n: &BigUint) -> Result<Vec<(BigUint, u32)>> {
    if let Some(small) = n.to_u64() {
        return Ok(factor_u64(small)
            .into_iter()
            .map(|(p, e)| (BigUint::from(p), e))
            .collect());
    }
    let mut rest = n.clone();
    let mut out: Vec<(BigUint, u32)> = Vec::new();
    for &p in small_primes() {
        let pb = BigUint::from(p);
        let mut e = 0;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            e += 1;
        }
        if e > 0 {
            out.push((pb, e));
        }
    }
    let mut pending = vec![rest];
    while let Some(m) = pending.pop() {
        if m.is_one() {
            continue;
        }
        if let Some(small) = m.to_u64() {
            out.extend(factor_u64(small).into_iter().map(|(p, e)| (BigUint::from(p), e)));
            continue;
        }
        if is_prime(&m)? {
            out.push((m, 1));
            continue;
        }
        match rho_big(&m, RHO_BUDGET) {
            Some(d) => {
                let other = &m / &d;
                pending.push(d);
                pending.push(other);
            }
            None => return Err(Error::Unfactored(m.to_string())),
        }
    }
    out.sort();
    let mut merged: Vec<(BigUint, u32)> = Vec::new();
    for (p, e) in out {
        match merged.last_mut() {
            Some((q, f)) if *q == p => *f += e,
            _ => merged.push((p, e)),
        }
    }
    Ok(merged)
}

/// Factorization of `|n|` for a nonzero integer, consulting the installed
/// factor cache for large inputs.
pub fn factor_integer(n: &BigInt) -> Result<Vec<(BigUint, u32)>> {
    if n.is_zero() {
        return Err(Error::domain("cannot factor zero"));
    }
    let m = n.magnitude();
    if m.bits() <= cache::CACHE_MIN_BITS {
        return factor_biguint_uncached(m);
    }
    if let Some(hit) = cache::lookup(m) {
        return Ok(hit);
    }
    let f = factor_biguint_uncached(m)?;
    cache::record(m, &f);
    Ok(f)
}

/// Signed factorization `sign · ∏ pᵉ` of a nonzero rational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrimeFactorization {
    pub sign: i8,
    #[serde(serialize_with = "serialize_factors")]
    pub factors: Vec<(BigUint, i64)>,
}

fn serialize_factors<S: serde::Serializer>(f: &[(BigUint, i64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(f.len()))?;
    for (p, e) in f {
        seq.serialize_element(&(p.to_string(), e))?;
    }
    seq.end()
}

impl PrimeFactorization {
    pub fn reassemble(&self) -> Rational {
        let mut num = BigInt::from(self.sign);
        let mut den = BigInt::one();
        for (p, e) in &self.factors {
            let pe = BigInt::from(p.pow(e.unsigned_abs() as u32));
            if *e > 0 {
                num *= pe;
            } else {
                den *= pe;
            }
        }
        Rational::new(num, den)
    }

    pub fn exponent_of(&self, p: u64) -> i64 {
        let pb = BigUint::from(p);
        self.factors
            .iter()
            .find(|(q, _)| *q == pb)
            .map_or(0, |(_, e)| *e)
    }

    /// Checks the structural invariants: strictly increasing certified primes,
    /// nonzero exponents, sign ±1.
    pub fn is_valid(&self) -> bool {
        if self.sign != 1 && self.sign != -1 {
            return false;
        }
        self.factors.windows(2).all(|w| w[0].0 < w[1].0)
            && self
                .factors
                .iter()
                .all(|(p, e)| *e != 0 && matches!(is_prime(p), Ok(true)))
    }
}

/// Exact signed factorization of a nonzero rational; denominator primes get
/// negative exponents.
pub fn factor(q: &Rational) -> Result<PrimeFactorization> {
    if q.is_zero() {
        return Err(Error::domain("cannot factor zero"));
    }
    let sign = if q.numer().sign() == num_bigint::Sign::Minus { -1 } else { 1 };
    let mut factors: Vec<(BigUint, i64)> = factor_integer(q.numer())?
        .into_iter()
        .map(|(p, e)| (p, e as i64))
        .collect();
    factors.extend(
        factor_integer(q.denom())?
            .into_iter()
            .map(|(p, e)| (p, -(e as i64))),
    );
    factors.sort();
    Ok(PrimeFactorization { sign, factors })
}

/// Positive divisors of `|n|` for nonzero `n`.
pub fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    let f = factor_integer(n)?;
    let mut divs = vec![BigInt::one()];
    for (p, e) in f {
        let p = BigInt::from(p);
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        for d in &divs {
            let mut pk = BigInt::one();
            for _ in 0..=e {
                next.push(d * &pk);
                pk *= &p;
            }
        }
        divs = next;
    }
    divs.sort();
    Ok(divs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use proptest::prelude::*;

    fn trial_division(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    #[test]
    fn factor_examples() {
        let f = factor(&rat(12, 1)).unwrap();
        assert_eq!(f.sign, 1);
        assert_eq!(f.factors, vec![(BigUint::from(2u32), 2), (BigUint::from(3u32), 1)]);
        let one = factor(&rat(1, 1)).unwrap();
        assert!(one.factors.is_empty());
        // 10403 = 101 · 103, checked against plain trial division.
        assert_eq!(trial_division(10403), vec![(101, 1), (103, 1)]);
        let f = factor(&rat(10403, 1)).unwrap();
        assert_eq!(f.factors, vec![(BigUint::from(101u32), 1), (BigUint::from(103u32), 1)]);
        assert!(factor(&rat(0, 1)).is_err());
    }

    #[test]
    fn negative_exponents_for_denominators() {
        let f = factor(&rat(-8, 45)).unwrap();
        assert_eq!(f.sign, -1);
        assert_eq!(f.exponent_of(2), 3);
        assert_eq!(f.exponent_of(3), -2);
        assert_eq!(f.exponent_of(5), -1);
        assert_eq!(f.reassemble(), rat(-8, 45));
    }

    #[test]
    fn large_semiprime() {
        // (2^61 - 1) · 1000000007
        let p = BigUint::from((1u64 << 61) - 1);
        let q = BigUint::from(1_000_000_007u64);
        let n = BigInt::from(&p * &q);
        let f = factor_integer(&n).unwrap();
        assert_eq!(f, vec![(q, 1), (p, 1)]);
    }

    #[test]
    fn primality_certificates_verify() {
        let p: BigUint = "170141183460469231731687303715884105727".parse().unwrap(); // 2^127 - 1
        let cert = prime_certificate(&p).unwrap().unwrap();
        assert!(matches!(cert, PrimalityCertificate::Pocklington { .. }));
        assert!(cert.verify(&p));
        assert!(!cert.verify(&(&p + 2u32)));
        let c: BigUint = "170141183460469231731687303715884105729".parse().unwrap();
        assert_eq!(prime_certificate(&c).unwrap(), None);
    }

    #[test]
    fn carmichael_and_strong_pseudoprimes() {
        for n in [561u64, 1105, 1729, 2047, 3215031751, 3825123056546413051] {
            assert!(!is_prime_u64(n), "{n}");
        }
        for p in [2u64, 3, 101, 1_000_000_007, (1 << 61) - 1, 18446744073709551557] {
            assert!(is_prime_u64(p), "{p}");
        }
    }

    #[test]
    fn divisors_of_twelve() {
        let d: Vec<i64> = divisors(&BigInt::from(-12)).unwrap().iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(d, vec![1, 2, 3, 4, 6, 12]);
    }

    proptest! {
        #[test]
        fn factor_matches_trial_division(n in 1u64..5_000_000) {
            prop_assert_eq!(factor_u64(n), trial_division(n));
        }

        #[test]
        fn reassemble_roundtrip(a in -1_000_000_000i64..1_000_000_000, b in 1i64..1_000_000) {
            prop_assume!(a != 0);
            let q = rat(a, b);
            let f = factor(&q).unwrap();
            prop_assert!(f.is_valid());
            prop_assert_eq!(f.reassemble(), q);
        }
    }
}
