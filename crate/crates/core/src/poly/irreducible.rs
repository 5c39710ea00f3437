//! Irreducibility certificates over ℚ: factor-degree patterns mod several
//! primes, a rational-root scan, and Kronecker's method for whatever factor
//! degrees the patterns leave open.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ff::{factor_degrees, reduce_int_poly, PrimeField};
use super::PolyQ;
use crate::arith::factor::divisors;
use crate::arith::{primes_up_to, Rational};
use crate::error::{Error, Result};

const PATTERN_PRIMES: usize = 40;
const KRONECKER_BUDGET: u64 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IrreducibilityCertificate {
    /// `(p, degrees of the factors mod p)` for each prime consulted.
    pub patterns: Vec<(u64, Vec<usize>)>,
    /// Factor degrees excluded by Kronecker's method.
    pub kronecker_degrees: Vec<usize>,
}

fn subset_sums(parts: &[usize], n: usize) -> BTreeSet<usize> {
    let mut reach = vec![false; n + 1];
    reach[0] = true;
    for &d in parts {
        for s in (d..=n).rev() {
            if reach[s - d] {
                reach[s] = true;
            }
        }
    }
    (1..n).filter(|&s| reach[s]).collect()
}

/// Certifies that `f` (nonconstant) is irreducible over ℚ, or reports a
/// factor as [`Error::Reducible`].
pub fn certify_irreducible(f: &PolyQ) -> Result<IrreducibilityCertificate> {
    if f.is_constant() {
        return Err(Error::domain("constant polynomial"));
    }
    let n = f.degree();
    let mut cert = IrreducibilityCertificate {
        patterns: Vec::new(),
        kronecker_degrees: Vec::new(),
    };
    if n == 1 {
        return Ok(cert);
    }
    let z = f.primitive_integer();
    if z[0].is_zero() {
        return Err(Error::Reducible(format!("{f} is divisible by x")));
    }
    if let Some(r) = rational_root(&z)? {
        return Err(Error::Reducible(format!("{f} has the rational root {r}")));
    }
    let mut open: BTreeSet<usize> = (1..n).collect();
    let lc = z[n].clone();
    let squarefree = f.is_squarefree();
    for p in primes_up_to(2000) {
        if cert.patterns.len() >= PATTERN_PRIMES || open.is_empty() {
            break;
        }
        if (&lc % BigInt::from(p)).is_zero() {
            continue;
        }
        let k = PrimeField::new(p)?;
        let fp = reduce_int_poly(k, &z);
        if squarefree && !fp.is_squarefree() {
            continue;
        }
        let degs = factor_degrees(&fp)?;
        let sums = subset_sums(&degs, n);
        open = open.intersection(&sums).copied().collect();
        cert.patterns.push((p, degs));
    }
    let pending: Vec<usize> = open.iter().copied().filter(|&d| d <= n / 2).collect();
    for d in pending {
        match kronecker_factor(&z, d)? {
            Some(g) => {
                return Err(Error::Reducible(format!("{f} has the factor {g}")));
            }
            None => cert.kronecker_degrees.push(d),
        }
    }
    Ok(cert)
}

fn eval_int(z: &[BigInt], x: i64) -> BigInt {
    let x = BigInt::from(x);
    z.iter().rev().fold(BigInt::zero(), |acc, c| acc * &x + c)
}

/// A rational root `r/s` must have `r | a₀` and `s | a_n`.
fn rational_root(z: &[BigInt]) -> Result<Option<Rational>> {
    let n = z.len() - 1;
    let f = PolyQ::from_bigints(z);
    let nums = divisors(&z[0])?;
    let dens = divisors(&z[n])?;
    if (nums.len() as u64) * (dens.len() as u64) > 4_000_000 {
        return Err(Error::IrreducibilityInconclusive(
            "too many rational-root candidates".into(),
        ));
    }
    for r in &nums {
        for s in &dens {
            if !r.gcd(s).is_one() {
                continue;
            }
            for sign in [1, -1] {
                let q = Rational::new(r * sign, s.clone());
                if f.eval(&q).is_zero() {
                    return Ok(Some(q));
                }
            }
        }
    }
    Ok(None)
}

/// Searches for an integer factor of exact degree `d` by interpolating through
/// divisors of `f` at `d + 1` integer points.
fn kronecker_factor(z: &[BigInt], d: usize) -> Result<Option<PolyQ>> {
    let f = PolyQ::from_bigints(z);
    // Pick the d+1 points in [−12, 12] whose values have the fewest divisors.
    let mut cands: Vec<(usize, i64, Vec<BigInt>)> = Vec::new();
    for x in -12i64..=12 {
        let v = eval_int(z, x);
        if v.is_zero() {
            continue;
        }
        let ds = divisors(&v)?;
        cands.push((ds.len(), x, ds));
    }
    cands.sort_by_key(|c| (c.0, c.1.abs(), c.1));
    cands.truncate(d + 1);
    if cands.len() < d + 1 {
        return Err(Error::IrreducibilityInconclusive("not enough evaluation points".into()));
    }
    let work: u64 = cands
        .iter()
        .enumerate()
        .map(|(i, c)| c.0 as u64 * if i == 0 { 1 } else { 2 })
        .product();
    if work > KRONECKER_BUDGET {
        return Err(Error::IrreducibilityInconclusive(format!(
            "Kronecker search for degree {d} needs {work} trials"
        )));
    }
    let xs: Vec<Rational> = cands.iter().map(|c| Rational::from_integer(c.1.into())).collect();
    // Signed divisor lists; the first value is taken positive since g and −g
    // are the same factor.
    let choices: Vec<Vec<BigInt>> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut v = c.2.clone();
            if i > 0 {
                v.extend(c.2.iter().map(|x| -x));
            }
            v
        })
        .collect();
    let mut idx = vec![0usize; d + 1];
    loop {
        let ys: Vec<Rational> = idx
            .iter()
            .zip(&choices)
            .map(|(&i, ch)| Rational::from_integer(ch[i].clone()))
            .collect();
        let g = lagrange(&xs, &ys);
        if g.degree() == d && !g.is_zero() && g.is_integral() && f.rem(&g).is_zero() {
            return Ok(Some(g));
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos > d {
                return Ok(None);
            }
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn lagrange(xs: &[Rational], ys: &[Rational]) -> PolyQ {
    let mut acc = PolyQ::zero();
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        if yi.is_zero() {
            continue;
        }
        let mut basis = PolyQ::one();
        let mut denom = Rational::one();
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                basis = &basis * &PolyQ::linear_root(xj);
                denom *= xi - xj;
            }
        }
        acc = &acc + &basis.scale(&(yi / denom));
    }
    acc
}

pub fn is_irreducible(f: &PolyQ) -> Result<bool> {
    match certify_irreducible(f) {
        Ok(_) => Ok(true),
        Err(Error::Reducible(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> PolyQ {
        PolyQ::from_ints(c)
    }

    #[test]
    fn certifies_library_fields() {
        for c in [
            vec![1, 0, 1],
            vec![-2, 0, 1],
            vec![-2, 0, 0, 1],
            vec![-1, -1, 0, 1],
            vec![-1, -1, 0, 0, 0, 1],
            vec![-2, 0, 0, 0, 0, 0, 0, 1],
        ] {
            certify_irreducible(&p(&c)).unwrap();
        }
    }

    #[test]
    fn x4_plus_1_needs_kronecker() {
        // Reducible modulo every prime, irreducible over ℚ.
        let cert = certify_irreducible(&p(&[1, 0, 0, 0, 1])).unwrap();
        assert_eq!(cert.kronecker_degrees, vec![2]);
        assert!(cert.patterns.iter().all(|(_, d)| d.len() >= 2));
    }

    #[test]
    fn detects_factors() {
        assert!(matches!(certify_irreducible(&p(&[-1, 0, 1])), Err(Error::Reducible(_))));
        // (x²+1)(x²+2): no rational roots, caught by Kronecker.
        let f = &p(&[1, 0, 1]) * &p(&[2, 0, 1]);
        assert!(matches!(certify_irreducible(&f), Err(Error::Reducible(_))));
        let g = &p(&[1, 1, 1]) * &p(&[-2, 0, 0, 1]);
        assert!(matches!(certify_irreducible(&g), Err(Error::Reducible(_))));
    }

    #[test]
    fn interpolation_recovers() {
        let xs: Vec<Rational> = (0..4).map(|x| Rational::from_integer(x.into())).collect();
        let g = p(&[3, -1, 0, 2]);
        let ys: Vec<Rational> = xs.iter().map(|x| g.eval(x)).collect();
        assert_eq!(lagrange(&xs, &ys), g);
    }
}
