//! Exact integers and rationals, p-adic valuations, factorization and CRT.

pub mod cache;
pub mod crt;
pub mod factor;

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

pub use crt::{crt_solve, Congruence, CongruenceSystem};
pub use factor::{factor, factor_integer, is_prime, is_prime_u64, PrimalityCertificate, PrimeFactorization};

/// Exact rational number; always stored with a positive, coprime denominator.
pub type Rational = BigRational;

/// A p-adic valuation, with `+∞` kept apart from every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    /// `self >= n`, with `+∞` dominating everything.
    pub fn at_least(self, n: i64) -> bool {
        match self {
            Valuation::Finite(v) => v >= n,
            Valuation::Infinite => true,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Equal,
            (Valuation::Infinite, _) => Greater,
            (_, Valuation::Infinite) => Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "inf"),
        }
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int<T: Into<BigInt>>(n: T) -> Rational {
    Rational::from_integer(n.into())
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(n: &BigInt, p: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// `v_p(q)`; errors when `p` is not prime.
pub fn valuation(q: &Rational, p: u64) -> Result<Valuation> {
    if !is_prime_u64(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    Ok(valuation_unchecked(q, p))
}

/// `v_p(q)` for a `p` already known to be prime.
pub fn valuation_unchecked(q: &Rational, p: u64) -> Valuation {
    if q.is_zero() {
        return Valuation::Infinite;
    }
    let num = int_valuation(q.numer(), p) as i64;
    let den = int_valuation(q.denom(), p) as i64;
    Valuation::Finite(num - den)
}

/// Residue of a p-integral rational modulo `p` (prime, fits in u64).
pub fn reduce_mod(q: &Rational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let d = q.denom().mod_floor(&pb).to_u64()?;
    if d == 0 {
        return None;
    }
    let n = q.numer().mod_floor(&pb).to_u64()?;
    let inv = factor::inv_mod_u64(d, p)?;
    Some(factor::mul_mod(n, inv, p))
}

/// Residue of a p-integral rational modulo `m` (any modulus coprime to its denominator).
pub fn reduce_mod_big(q: &Rational, m: &BigInt) -> Option<BigInt> {
    let d = q.denom().mod_floor(m);
    let inv = inv_mod_big(&d, m)?;
    Some((q.numer().mod_floor(m) * inv).mod_floor(m))
}

pub fn inv_mod_big(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

pub fn pow_big(base: &BigInt, exp: u32) -> BigInt {
    num_traits::pow(base.clone(), exp as usize)
}

pub fn pow_rat(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn abs_biguint(n: &BigInt) -> BigUint {
    n.magnitude().clone()
}

pub fn sign_of(q: &Rational) -> i8 {
    if q.is_zero() {
        0
    } else if q.is_positive() {
        1
    } else {
        -1
    }
}

pub fn big_sign(n: &BigInt) -> i8 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Parses `a`, `-a`, or `a/b`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::domain(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::domain("zero denominator"));
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Primes `<= bound`, by sieve.
pub fn primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 2 {
        return Vec::new();
    }
    let n = bound as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Distinct primes dividing the numerator or denominator of `q` (nonzero).
pub fn support(q: &Rational) -> Result<Vec<BigUint>> {
    let f = factor(q)?;
    Ok(f.factors.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&rat(8, 3), 2).unwrap(), Valuation::Finite(3));
        assert_eq!(valuation(&rat(8, 3), 3).unwrap(), Valuation::Finite(-1));
        assert_eq!(valuation(&rat(0, 1), 5).unwrap(), Valuation::Infinite);
        assert!(valuation(&rat(8, 3), 4).is_err());
    }

    #[test]
    fn infinity_dominates() {
        assert!(Valuation::Infinite > Valuation::Finite(i64::MAX));
        assert!(Valuation::Infinite.at_least(1_000_000));
    }

    #[test]
    fn rational_normal_form() {
        let z = rat(0, -7);
        assert!(z.denom().is_one());
        let q = rat(6, -4);
        assert_eq!(q.numer(), &BigInt::from(-3));
        assert_eq!(q.denom(), &BigInt::from(2));
        assert_eq!(parse_rational(" -10/4 ").unwrap(), rat(-5, 2));
    }

    #[test]
    fn reduction_mod_p() {
        assert_eq!(reduce_mod(&rat(13, 4), 5), Some(2)); // 4^{-1} = 4 mod 5
        assert_eq!(reduce_mod(&rat(1, 5), 5), None);
        assert_eq!(reduce_mod(&rat(-1, 1), 7), Some(6));
    }

    proptest! {
        #[test]
        fn valuation_is_additive(a in -5000i64..5000, b in 1i64..5000, c in -5000i64..5000, d in 1i64..5000,
                                 pi in 0usize..6) {
            prop_assume!(a != 0 && c != 0);
            let p = [2u64, 3, 5, 7, 11, 13][pi];
            let x = rat(a, b);
            let y = rat(c, d);
            let vx = valuation(&x, p).unwrap().finite().unwrap();
            let vy = valuation(&y, p).unwrap().finite().unwrap();
            let vxy = valuation(&(&x * &y), p).unwrap().finite().unwrap();
            prop_assert_eq!(vxy, vx + vy);
        }
    }
}
