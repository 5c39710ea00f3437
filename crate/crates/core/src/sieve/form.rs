//! Irreducible binary forms with integer coefficients.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::arith::Rational;
use crate::error::{Error, Result};
use crate::poly::{certify_irreducible, IrreducibilityCertificate, PolyQ};

/// `P(λ, μ) = Σ c_j λ^j μ^{d−j}`, certified irreducible over ℚ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomogeneousForm {
    #[serde(serialize_with = "crate::ser::display_vec")]
    coeffs: Vec<BigInt>,
    certificate: IrreducibilityCertificate,
}

impl HomogeneousForm {
    /// `coeffs[j]` multiplies `λ^j μ^{d−j}`; the degree is `coeffs.len() − 1`.
    pub fn new(coeffs: Vec<BigInt>) -> Result<Self> {
        let d = coeffs.len().checked_sub(1).ok_or_else(|| Error::domain("empty form"))?;
        if coeffs.iter().all(Zero::is_zero) {
            return Err(Error::domain("zero form"));
        }
        if d == 0 {
            return Err(Error::domain("a form needs positive degree"));
        }
        if d >= 2 && coeffs[d].is_zero() {
            return Err(Error::Reducible("form is divisible by μ".into()));
        }
        let certificate = if coeffs[d].is_zero() {
            IrreducibilityCertificate { patterns: vec![], kronecker_degrees: vec![] }
        } else {
            certify_irreducible(&PolyQ::from_bigints(&coeffs))?
        };
        Ok(HomogeneousForm { coeffs, certificate })
    }

    pub fn from_ints(c: &[i64]) -> Result<Self> {
        Self::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Homogenizes `p(x)` to degree `deg p`; `p` must have integer coefficients.
    pub fn from_poly(p: &PolyQ) -> Result<Self> {
        let c = p
            .integer_coeffs()
            .ok_or_else(|| Error::domain(format!("form {p} must have integer coefficients")))?;
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn certificate(&self) -> &IrreducibilityCertificate {
        &self.certificate
    }

    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn eval(&self, lambda: &BigInt, mu: &BigInt) -> BigInt {
        let d = self.degree();
        let mut acc = BigInt::zero();
        let mut mu_pow = BigInt::from(1);
        let mut terms = vec![BigInt::zero(); d + 1];
        for j in (0..=d).rev() {
            terms[j] = mu_pow.clone();
            mu_pow *= mu;
        }
        let mut lam_pow = BigInt::from(1);
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += c * &lam_pow * &terms[j];
            }
            lam_pow *= lambda;
        }
        acc
    }

    pub fn eval_rat(&self, lambda: &Rational, mu: &Rational) -> Rational {
        let d = self.degree() as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| Rational::from_integer(c.clone()) * lambda.pow(j as i32) * mu.pow(d - j as i32))
            .sum()
    }

    /// `P(x, 1)`.
    pub fn dehomogenize(&self) -> PolyQ {
        PolyQ::from_bigints(&self.coeffs)
    }
}

impl fmt::Display for HomogeneousForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.degree();
        let mut first = true;
        for j in (0..=d).rev() {
            let c = &self.coeffs[j];
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let mono = [("λ", j), ("μ", d - j)]
                .iter()
                .filter(|(_, e)| *e > 0)
                .map(|(v, e)| if *e == 1 { v.to_string() } else { format!("{v}^{e}") })
                .collect::<Vec<_>>()
                .join("·");
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a == BigInt::from(1) {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{a}·{mono}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn evaluation_and_display() {
        let f = HomogeneousForm::from_ints(&[-2, 0, 0, 1]).unwrap();
        assert_eq!(f.to_string(), "λ^3 - 2·μ^3");
        assert_eq!(f.eval(&BigInt::from(3), &BigInt::from(2)), BigInt::from(11));
        assert_eq!(f.eval_rat(&rat(1, 2), &rat(1, 3)), rat(1, 8) - rat(2, 27));
        let g = HomogeneousForm::from_ints(&[1, 0, 1]).unwrap();
        assert_eq!(g.eval(&BigInt::from(1), &BigInt::from(4)), BigInt::from(17));
    }

    #[test]
    fn reducible_forms_rejected() {
        assert!(matches!(HomogeneousForm::from_ints(&[-1, 0, 1]), Err(Error::Reducible(_))));
        assert!(matches!(HomogeneousForm::from_ints(&[1, 1, 0]), Err(Error::Reducible(_))));
        assert!(matches!(HomogeneousForm::from_ints(&[0, 1, 1]), Err(Error::Reducible(_))));
        assert!(HomogeneousForm::from_ints(&[3, 0]).is_ok());
        assert!(HomogeneousForm::from_ints(&[0, 0]).is_err());
    }
}
