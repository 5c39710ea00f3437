//! Three-valued local norm tests for elements `b(t − a)` of k ⊗ ℚ_v.

use std::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use super::symbols::{hilbert_symbol, PlaceOfQ};
use crate::arith::{valuation_unchecked, Rational, Valuation};
use crate::error::{Error, Result};
use crate::field::{PlaceAbove, RelativeExtension};
use crate::poly::ff::{factor_degrees, reduce_int_poly, PrimeField};
use crate::poly::{count_real_roots, discriminant, PolyQ};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UndeterminedReason {
    RamifiedCase,
    InsufficientPrecision,
    Asserted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormVerdict {
    IsNorm,
    NotNorm,
    Undetermined(UndeterminedReason),
}

impl NormVerdict {
    /// IsNorm only if every part is; NotNorm if any part is.
    pub fn all<I: IntoIterator<Item = NormVerdict>>(parts: I) -> NormVerdict {
        let mut out = NormVerdict::IsNorm;
        for v in parts {
            match v {
                NormVerdict::NotNorm => return NormVerdict::NotNorm,
                NormVerdict::Undetermined(r) if out == NormVerdict::IsNorm => out = NormVerdict::Undetermined(r),
                _ => {}
            }
        }
        out
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            NormVerdict::IsNorm
        } else {
            NormVerdict::NotNorm
        }
    }

    pub fn is_undetermined(self) -> bool {
        matches!(self, NormVerdict::Undetermined(_))
    }
}

impl fmt::Display for NormVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormVerdict::IsNorm => write!(f, "is_norm"),
            NormVerdict::NotNorm => write!(f, "not_norm"),
            NormVerdict::Undetermined(UndeterminedReason::RamifiedCase) => write!(f, "undetermined:ramified_case"),
            NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision) => {
                write!(f, "undetermined:insufficient_precision")
            }
            NormVerdict::Undetermined(UndeterminedReason::Asserted) => write!(f, "undetermined:asserted"),
        }
    }
}

impl Serialize for NormVerdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How well the point `t` is known: exactly, modulo `p^N`, or within `ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Adic(i64),
    Real(Rational),
}

/// The element `b(t − a)` of `k ⊗ ℚ_v`, with `b` a polynomial in `a`.
#[derive(Clone, Debug)]
pub struct LocalElement {
    pub b: PolyQ,
    pub t: Rational,
    pub precision: Precision,
}

impl LocalElement {
    pub fn exact(b: PolyQ, t: Rational) -> Self {
        LocalElement {
            b,
            t,
            precision: Precision::Exact,
        }
    }
}

fn gcd_all(v: &[usize]) -> usize {
    v.iter().fold(0usize, |acc, &d| acc.gcd(&d))
}

/// The point `t` an element was computed from, with its precision; used to
/// decide whether a verdict survives every refinement of `t`.
struct Stability<'a> {
    t: &'a Rational,
    precision: &'a Precision,
}

impl Stability<'_> {
    fn adic(&self, v_t: i64, slack: i64) -> Result<bool> {
        match self.precision {
            Precision::Exact => Ok(true),
            Precision::Adic(n) => Ok(n - v_t >= slack),
            Precision::Real(_) => Err(Error::domain("real precision given at a finite place")),
        }
    }

    fn eps(&self) -> Result<Option<&Rational>> {
        match self.precision {
            Precision::Exact => Ok(None),
            Precision::Real(e) => Ok(Some(e)),
            Precision::Adic(_) => Err(Error::domain("p-adic precision given at the real place")),
        }
    }
}

/// Whether `x = b(t − a)` is a norm from `L ⊗ k_v` (restricted to the
/// component at `w` when given).
pub fn local_norm_test(
    x: &LocalElement,
    l: &RelativeExtension,
    v: PlaceOfQ,
    w: Option<&PlaceAbove>,
) -> Result<NormVerdict> {
    let k = l.base();
    if k.reduce(&x.b).is_zero() {
        return Err(Error::domain("b must be a nonzero element"));
    }
    let c = k.mul(&x.b, &k.t_minus_a(&x.t));
    let st = Stability {
        t: &x.t,
        precision: &x.precision,
    };
    decide(&c, l, v, w, Some(st))
}

/// Whether an exactly known element `c` of k (a polynomial in `a`) is a norm
/// from `L ⊗ k_v`.
pub fn local_norm_test_element(
    c: &PolyQ,
    l: &RelativeExtension,
    v: PlaceOfQ,
    w: Option<&PlaceAbove>,
) -> Result<NormVerdict> {
    decide(&l.base().reduce(c), l, v, w, None)
}

fn decide(
    c: &PolyQ,
    l: &RelativeExtension,
    v: PlaceOfQ,
    w: Option<&PlaceAbove>,
    st: Option<Stability<'_>>,
) -> Result<NormVerdict> {
    let k = l.base();
    let inexact = st.as_ref().is_some_and(|s| *s.precision != Precision::Exact);
    if c.is_zero() {
        return Ok(if inexact {
            NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision)
        } else {
            NormVerdict::NotNorm
        });
    }
    if l.degree() == 1 {
        return Ok(NormVerdict::IsNorm);
    }
    if k.degree() == 1 {
        return decide_over_q(&c.coeff(0), l, v, st);
    }
    match v {
        PlaceOfQ::Real => {
            let eps = match &st {
                Some(s) => s.eps()?,
                None => None,
            };
            let mut parts = Vec::new();
            for mut rho in k.real_roots() {
                if l.has_real_place_over(&mut rho)? {
                    parts.push(NormVerdict::IsNorm);
                    continue;
                }
                if let (Some(e), Some(s)) = (eps, &st) {
                    let lo = s.t - e;
                    let hi = s.t + e;
                    if rho.cmp_rational(&lo).is_ge() && rho.cmp_rational(&hi).is_le() {
                        parts.push(NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision));
                        continue;
                    }
                }
                parts.push(NormVerdict::from_bool(rho.sign_of(c) > 0));
            }
            Ok(NormVerdict::all(parts))
        }
        PlaceOfQ::Finite(p) => {
            if k.is_bad_prime(p) {
                return Ok(NormVerdict::Undetermined(UndeterminedReason::RamifiedCase));
            }
            let places = k.places_above(p)?;
            let selected: Vec<&PlaceAbove> = match w {
                Some(w) => vec![w],
                None => places.iter().collect(),
            };
            let mut parts = Vec::new();
            for w in selected {
                let Some(degs) = l.residue_degrees_over(w)? else {
                    parts.push(NormVerdict::Undetermined(UndeterminedReason::RamifiedCase));
                    continue;
                };
                let g = gcd_all(&degs);
                if g == 1 {
                    parts.push(NormVerdict::IsNorm);
                    continue;
                }
                if let Some(s) = &st {
                    let vt = k.valuation_at(&k.t_minus_a(s.t), w)?.finite().expect("t − a is nonzero");
                    if !s.adic(vt, 1)? {
                        parts.push(NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision));
                        continue;
                    }
                }
                let vc = k.valuation_at(c, w)?.finite().unwrap();
                parts.push(NormVerdict::from_bool(vc.rem_euclid(g as i64) == 0));
            }
            Ok(NormVerdict::all(parts))
        }
    }
}

fn decide_over_q(xq: &Rational, l: &RelativeExtension, v: PlaceOfQ, st: Option<Stability<'_>>) -> Result<NormVerdict> {
    let r = -l.base().poly().coeff(0);
    let g = l.over_q().expect("degree-one base");
    match v {
        PlaceOfQ::Real => {
            if l.degree() % 2 == 1 || count_real_roots(&g, None)? > 0 {
                return Ok(NormVerdict::IsNorm);
            }
            if let Some(s) = &st {
                if let Some(e) = s.eps()? {
                    if (s.t - &r).abs() <= *e {
                        return Ok(NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision));
                    }
                }
            }
            Ok(NormVerdict::from_bool(xq.is_positive()))
        }
        PlaceOfQ::Finite(p) => {
            let vt = st
                .as_ref()
                .map(|s| valuation_unchecked(&(s.t - &r), p).finite().unwrap());
            if l.degree() == 2 {
                if let (Some(s), Some(vt)) = (&st, vt) {
                    if !s.adic(vt, if p == 2 { 3 } else { 1 })? {
                        return Ok(NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision));
                    }
                }
                let d = discriminant(&g)?;
                return Ok(NormVerdict::from_bool(hilbert_symbol(xq, &d, v)? == 1));
            }
            let (ints, den) = g.integer_multiple();
            let pb = num_bigint::BigInt::from(p);
            if (&den % &pb).is_zero() || valuation_unchecked(&discriminant(&g)?, p) != Valuation::Finite(0) {
                return Ok(NormVerdict::Undetermined(UndeterminedReason::RamifiedCase));
            }
            let gp = reduce_int_poly(PrimeField::new(p)?, &ints);
            let gd = gcd_all(&factor_degrees(&gp)?);
            if gd == 1 {
                return Ok(NormVerdict::IsNorm);
            }
            if let (Some(s), Some(vt)) = (&st, vt) {
                if !s.adic(vt, 1)? {
                    return Ok(NormVerdict::Undetermined(UndeterminedReason::InsufficientPrecision));
                }
            }
            let vx = valuation_unchecked(xq, p).finite().unwrap();
            Ok(NormVerdict::from_bool(vx.rem_euclid(gd as i64) == 0))
        }
    }
}
