use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Congruence {
    #[serde(serialize_with = "crate::ser::display")]
    pub residue: BigInt,
    #[serde(serialize_with = "crate::ser::display")]
    pub modulus: BigInt,
}

impl Congruence {
    /// `x ≡ residue (mod modulus)`, residue normalized into `[0, modulus)`.
    pub fn new(residue: impl Into<BigInt>, modulus: impl Into<BigInt>) -> Result<Self> {
        let modulus = modulus.into();
        if !modulus.is_positive() {
            return Err(Error::domain(format!("modulus must be positive, got {modulus}")));
        }
        let residue = residue.into().mod_floor(&modulus);
        Ok(Congruence { residue, modulus })
    }

    pub fn holds(&self, x: &BigInt) -> bool {
        (x - &self.residue).mod_floor(&self.modulus).is_zero()
    }
}

/// A list of congruences with pairwise coprime moduli.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CongruenceSystem {
    pub congruences: Vec<Congruence>,
}

impl CongruenceSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Congruence) {
        self.congruences.push(c);
    }

    pub fn with(mut self, residue: impl Into<BigInt>, modulus: impl Into<BigInt>) -> Result<Self> {
        self.push(Congruence::new(residue, modulus)?);
        Ok(self)
    }

    pub fn modulus(&self) -> BigInt {
        self.congruences.iter().map(|c| &c.modulus).product()
    }
}

/// Unique residue class mod the product of the moduli. The empty system
/// yields `(0, 1)`.
pub fn crt_solve(system: &CongruenceSystem) -> Result<(BigInt, BigInt)> {
    let cs = &system.congruences;
    for i in 0..cs.len() {
        for j in i + 1..cs.len() {
            if !cs[i].modulus.gcd(&cs[j].modulus).is_one() {
                return Err(Error::NonCoprimeModuli {
                    first: i,
                    second: j,
                    first_modulus: cs[i].modulus.to_string(),
                    second_modulus: cs[j].modulus.to_string(),
                });
            }
        }
    }
    let mut x = BigInt::zero();
    let mut m = BigInt::one();
    for c in cs {
        // x + m·k ≡ r (mod n)  ⇒  k ≡ (r − x)·m⁻¹ (mod n)
        let e = m.extended_gcd(&c.modulus);
        let k = ((&c.residue - &x) * e.x).mod_floor(&c.modulus);
        x += &m * k;
        m *= &c.modulus;
        x = x.mod_floor(&m);
    }
    Ok((x, m))
}
