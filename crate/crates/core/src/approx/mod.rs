//! Constructive strong approximation: the line trick on affine space minus
//! codimension-2 linear loci, norms with prescribed local behaviour, and
//! local points on the fibers of the norm-form variety.

pub mod fiber;
pub mod line;
pub mod multiplier;

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{crt_solve, is_prime, pow_big, reduce_mod_big, valuation_unchecked, Congruence, CongruenceSystem, Rational};
use crate::error::{Error, Result};
use crate::local::{PlaceOfQ, Precision};

pub use fiber::{w_fiber_verify, FiberPlaceVerdict, FiberVerdict};
pub use line::{line_trick_solve, verify_line_solution, LineTrickSolution, PointTarget, PuncturedAffineProblem};
pub use multiplier::{
    norm_multiplier_solve, verify_certificate, NormCertificate, NormMultiplierProblem, NormTarget, SearchBox,
};

/// One closeness condition on a rational number.
#[derive(Clone, Debug)]
pub struct Condition {
    pub place: PlaceOfQ,
    pub t: Rational,
    pub precision: Precision,
}

impl Condition {
    pub fn holds(&self, x: &Rational) -> bool {
        match (&self.precision, self.place) {
            (Precision::Adic(n), PlaceOfQ::Finite(p)) => valuation_unchecked(&(x - &self.t), p).at_least(*n),
            (Precision::Real(e), PlaceOfQ::Real) => (x - &self.t).abs() <= *e,
            (Precision::Exact, _) => *x == self.t,
            _ => false,
        }
    }
}

/// `r0 mod m` over the common denominator `den`: every `λ ≡ r0 (mod m)` gives
/// `λ/den` meeting all finite conditions.
pub(crate) fn crt_class(conds: &[Condition]) -> Result<(BigInt, BigInt, BigInt)> {
    let mut den = BigInt::one();
    for c in conds {
        if let PlaceOfQ::Finite(p) = c.place {
            let v = valuation_unchecked(&c.t, p).finite().unwrap_or(0);
            if v < 0 {
                let pk = pow_big(&BigInt::from(p), (-v) as u32);
                if !(&den % &pk).is_zero() {
                    den = den.lcm(&pk);
                }
            }
        }
    }
    let den_q = Rational::from_integer(den.clone());
    let mut sys = CongruenceSystem::new();
    for c in conds {
        if let (PlaceOfQ::Finite(p), Precision::Adic(n)) = (c.place, &c.precision) {
            let m = n + valuation_unchecked(&den_q, p).finite().unwrap();
            if m <= 0 {
                continue;
            }
            let modulus = pow_big(&BigInt::from(p), m as u32);
            let r = reduce_mod_big(&(&den_q * &c.t), &modulus)
                .ok_or_else(|| Error::Internal("scaled target is not p-integral".into()))?;
            sys.push(Congruence::new(r, modulus)?);
        }
    }
    let (r0, m) = if sys.modulus().is_one() {
        (BigInt::zero(), BigInt::one())
    } else {
        crt_solve(&sys)?
    };
    Ok((r0, m, den))
}

/// Smallest prime `≥ lower` outside `avoid` and coprime to `m`.
pub(crate) fn prime_at_least(lower: &BigInt, avoid: &BTreeSet<u64>, m: &BigInt) -> Result<BigInt> {
    let mut q = if *lower < BigInt::from(2) { BigInt::from(2) } else { lower.clone() };
    loop {
        let qu: BigUint = q.to_biguint().expect("positive");
        let skip = q.to_u64().is_some_and(|x| avoid.contains(&x)) || (m % &q).is_zero();
        if !skip && is_prime(&qu)? {
            return Ok(q);
        }
        q += 1;
    }
}

/// The element of `r (mod m)` closest to `x`, ties toward −∞.
pub(crate) fn nearest_in_class(x: &Rational, r: &BigInt, m: &BigInt) -> BigInt {
    let base = x.floor().to_integer();
    let lo = &base - (&base - r).mod_floor(m);
    let hi = &lo + m;
    if (x - Rational::from_integer(lo.clone())).abs() <= (Rational::from_integer(hi.clone()) - x).abs() {
        lo
    } else {
        hi
    }
}

/// A rational meeting every condition, by CRT at the finite places; a real
/// condition is met by adding one auxiliary prime denominator outside
/// `avoid`, large enough that the class is ε-dense.
pub fn weak_approximation(conds: &[Condition], avoid: &BTreeSet<u64>) -> Result<Rational> {
    let (r0, m, den) = crt_class(conds)?;
    let real = conds.iter().find(|c| c.place == PlaceOfQ::Real);
    let x = match real {
        None => {
            let r = nearest_in_class(&Rational::zero(), &r0, &m);
            Rational::new(r, den)
        }
        Some(c) => {
            let Precision::Real(eps) = &c.precision else {
                return Err(Error::domain("real condition needs an ε"));
            };
            let spacing = Rational::new(m.clone(), den.clone());
            let q = if spacing <= *eps {
                BigInt::one()
            } else {
                let lower = (&spacing / eps).ceil().to_integer();
                prime_at_least(&lower, avoid, &m)?
            };
            let d = &den * &q;
            let class = (&r0 * &q).mod_floor(&m);
            let lam = nearest_in_class(&(&c.t * Rational::from_integer(d.clone())), &class, &m);
            Rational::new(lam, d)
        }
    };
    if !conds.iter().all(|c| c.holds(&x)) {
        return Err(Error::Internal("weak approximation missed a condition".into()));
    }
    Ok(x)
}

/// Primes dividing the denominator of `x`, with exponents.
pub(crate) fn denominator_primes(x: &Rational) -> Result<Vec<(u64, u32)>> {
    crate::arith::factor_integer(x.denom())?
        .into_iter()
        .map(|(p, e)| Ok((p.to_u64().ok_or_else(|| Error::domain("prime exceeds 64 bits"))?, e)))
        .collect()
}

/// Whether every prime in the denominator of `x` lies in `allowed`.
pub(crate) fn integral_outside(x: &Rational, allowed: &BTreeSet<u64>) -> bool {
    let mut d = x.denom().clone();
    for &p in allowed {
        let pb = BigInt::from(p);
        while (&d % &pb).is_zero() {
            d /= &pb;
        }
    }
    d.is_one()
}
