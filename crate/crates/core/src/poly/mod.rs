//! Polynomials over ℚ and over finite fields.

pub mod ff;
pub mod hensel;
pub mod irreducible;
pub mod rational;
pub mod sturm;

use num_traits::{One, Zero};

use crate::arith::Rational;

pub use ff::{factor_mod, roots_in_field, FiniteField, FqField, PolyFq, PrimeField};
pub use irreducible::{certify_irreducible, IrreducibilityCertificate};
pub use rational::{discriminant, resultant, PolyQ};
pub use sturm::{count_real_roots, real_roots, RealAlgebraic, RealRoot, SturmSequence};

/// Determinant by Gaussian elimination over ℚ.
pub fn det(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut acc = Rational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if piv != col {
            m.swap(piv, col);
            acc = -acc;
        }
        let pv = m[col][col].clone();
        acc *= &pv;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pv;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    acc
}
