//! Linear Hensel lifting of a coprime factorization mod p to mod p^k, and
//! valuations at the p-adic factors it produces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::ff::{FiniteField, PolyFq, PrimeField};
use crate::arith::{pow_big, Valuation};

type Zpoly = Vec<BigInt>;

fn trim(mut v: Zpoly) -> Zpoly {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn zmul(a: &[BigInt], b: &[BigInt], m: &BigInt) -> Zpoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut v = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    trim(v.into_iter().map(|c| c.mod_floor(m)).collect())
}

/// Remainder modulo a monic polynomial, coefficients reduced mod `m`.
pub fn zrem_monic(a: &[BigInt], d: &[BigInt], m: &BigInt) -> Zpoly {
    let mut r: Zpoly = a.iter().map(|c| c.mod_floor(m)).collect();
    let dd = d.len() - 1;
    while r.len() > dd {
        let top = r.pop().unwrap();
        if !top.is_zero() {
            let off = r.len() - dd;
            for j in 0..dd {
                r[off + j] = (&r[off + j] - &top * &d[j]).mod_floor(m);
            }
        }
    }
    trim(r)
}

fn to_fp(p: PrimeField, a: &[BigInt]) -> PolyFq<PrimeField> {
    let pb = BigInt::from(p.p());
    PolyFq::new(p, a.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect())
}

fn from_fp(a: &PolyFq<PrimeField>) -> Zpoly {
    a.coeffs.iter().map(|&c| BigInt::from(c)).collect()
}

fn ext_gcd_fp(a: &PolyFq<PrimeField>, b: &PolyFq<PrimeField>) -> (PolyFq<PrimeField>, PolyFq<PrimeField>) {
    let k = a.field;
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (PolyFq::one(k), PolyFq::zero(k));
    let (mut t0, mut t1) = (PolyFq::zero(k), PolyFq::one(k));
    while !r1.is_zero() {
        let (q, r) = r0.div_rem(&r1);
        let s = s0.sub(&q.mul(&s1));
        let t = t0.sub(&q.mul(&t1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
        t0 = std::mem::replace(&mut t1, t);
    }
    let inv = k.inv(&r0.lc()).expect("coprime inputs");
    (s0.scale(&inv), t0.scale(&inv))
}

/// Lifts `f ≡ g·h (mod p)` with `g, h` monic and coprime to `f ≡ G·H (mod p^k)`.
fn lift_pair(f: &[BigInt], g: &PolyFq<PrimeField>, h: &PolyFq<PrimeField>, k: u32) -> (Zpoly, Zpoly) {
    let field = g.field;
    let p = BigInt::from(field.p());
    let (_, t) = ext_gcd_fp(g, h);
    let mut big_g = from_fp(g);
    let mut big_h = from_fp(h);
    let mut pj = p.clone();
    for _ in 1..k {
        let next = &pj * &p;
        let gh = zmul(&big_g, &big_h, &next);
        let diff: Zpoly = (0..f.len().max(gh.len()))
            .map(|i| {
                let a = f.get(i).cloned().unwrap_or_default();
                let b = gh.get(i).cloned().unwrap_or_default();
                (a - b).mod_floor(&next)
            })
            .collect();
        let e = to_fp(field, &diff.iter().map(|c| c / &pj).collect::<Vec<_>>());
        let dg = t.mul(&e).rem(g);
        let dh = e.sub(&dg.mul(h)).div_rem(g).0;
        for (i, c) in dg.coeffs.iter().enumerate() {
            big_g[i] = (&big_g[i] + &pj * c).mod_floor(&next);
        }
        for (i, c) in dh.coeffs.iter().enumerate() {
            big_h[i] = (&big_h[i] + &pj * c).mod_floor(&next);
        }
        pj = next;
    }
    (big_g, big_h)
}

/// Lifts the monic pairwise-coprime factorization `factors` of the monic `f`
/// mod p to monic factors mod p^k, in the same order.
pub fn hensel_lift(f: &[BigInt], factors: &[PolyFq<PrimeField>], k: u32) -> Vec<Zpoly> {
    assert!(!factors.is_empty());
    let field = factors[0].field;
    let m = pow_big(&BigInt::from(field.p()), k);
    if factors.len() == 1 {
        return vec![f.iter().map(|c| c.mod_floor(&m)).collect()];
    }
    let g = &factors[0];
    let h = factors[1..]
        .iter()
        .fold(PolyFq::one(field), |acc, x| acc.mul(x));
    let (big_g, big_h) = lift_pair(f, g, &h, k);
    let mut out = vec![big_g];
    out.extend(hensel_lift(&big_h, &factors[1..], k));
    out
}

/// `min v_p` of the coefficients of `c mod H` where `H` is a monic p-adic
/// factor known mod p^k. Exact when the result is below `k`; otherwise the
/// valuation is only known to be `≥ k` and `None` is returned.
pub fn valuation_mod_factor(c: &[BigInt], h: &[BigInt], p: u64, k: u32) -> Option<Valuation> {
    let m = pow_big(&BigInt::from(p), k);
    let r = zrem_monic(c, h, &m);
    if r.is_empty() {
        return None;
    }
    let pb = BigInt::from(p);
    let v = r
        .iter()
        .filter(|x| !x.is_zero())
        .map(|x| {
            let mut x = x.clone();
            let mut e = 0i64;
            while (&x % &pb).is_zero() {
                x /= &pb;
                e += 1;
            }
            e
        })
        .min()
        .unwrap();
    (v < k as i64).then_some(Valuation::Finite(v))
}

pub fn is_one(z: &[BigInt]) -> bool {
    z.len() == 1 && z[0].is_one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::ff::factor_mod;

    fn z(c: &[i64]) -> Zpoly {
        c.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn lift_x2_plus_1_mod_625() {
        let f = z(&[1, 0, 1]);
        let k = PrimeField::new(5).unwrap();
        let fac: Vec<_> = factor_mod(&to_fp(k, &f)).unwrap().into_iter().map(|x| x.0).collect();
        let lifted = hensel_lift(&f, &fac, 4);
        let m = BigInt::from(625);
        let prod = zmul(&lifted[0], &lifted[1], &m);
        assert_eq!(prod, z(&[1, 0, 1]));
        // The roots are the two square roots of −1 mod 625: 182 and 443.
        let mut roots: Vec<BigInt> = lifted.iter().map(|g| (-&g[0]).mod_floor(&m)).collect();
        roots.sort();
        assert_eq!(roots, vec![BigInt::from(182), BigInt::from(443)]);
    }

    #[test]
    fn valuation_at_split_place() {
        // In ℚ(i) at 5: 2 + i lies in one place above 5 only.
        let f = z(&[1, 0, 1]);
        let k = PrimeField::new(5).unwrap();
        let fac: Vec<_> = factor_mod(&to_fp(k, &f)).unwrap().into_iter().map(|x| x.0).collect();
        let lifted = hensel_lift(&f, &fac, 3);
        let c = z(&[2, 1]);
        let vals: Vec<_> = lifted.iter().map(|h| valuation_mod_factor(&c, h, 5, 3)).collect();
        let mut finite: Vec<i64> = vals.iter().map(|v| v.unwrap().finite().unwrap()).collect();
        finite.sort();
        assert_eq!(finite, vec![0, 1]);
        // 25 has valuation 2 at both.
        for h in &lifted {
            assert_eq!(valuation_mod_factor(&z(&[25]), h, 5, 3), Some(Valuation::Finite(2)));
            assert_eq!(valuation_mod_factor(&z(&[125]), h, 5, 3), None);
        }
    }
}
