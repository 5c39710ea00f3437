//! Relative extensions L/k given by a monic g(x) with coefficients in k, and
//! the polynomial arithmetic over k they need.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::absolute::{NumberFieldAbs, PlaceAbove};
use crate::arith::Rational;
use crate::error::{Error, Result};
use crate::poly::ff::{factor_degrees, roots_in_field, PolyFq};
use crate::poly::{certify_irreducible, PolyQ, RealAlgebraic};

/// Polynomial in x over k; coefficients are reduced elements of k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KPoly {
    pub coeffs: Vec<PolyQ>,
}

impl KPoly {
    pub fn new(k: &NumberFieldAbs, coeffs: Vec<PolyQ>) -> Self {
        let mut coeffs: Vec<PolyQ> = coeffs.iter().map(|c| k.reduce(c)).collect();
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        KPoly { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lc(&self) -> PolyQ {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn coeff(&self, i: usize) -> PolyQ {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn derivative(&self, k: &NumberFieldAbs) -> KPoly {
        KPoly::new(
            k,
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.scale(&Rational::from_integer((i as i64).into())))
                .collect(),
        )
    }

    pub fn rem(&self, d: &KPoly, k: &NumberFieldAbs) -> Result<KPoly> {
        let inv = k.inv(&d.lc())?;
        let mut r = self.coeffs.clone();
        let dd = d.degree();
        while r.len() > dd && !r.is_empty() {
            let top = r.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let c = k.mul(&top, &inv);
            let off = r.len() - dd;
            for j in 0..dd {
                r[off + j] = k.reduce(&(&r[off + j] - &k.mul(&c, &d.coeffs[j])));
            }
        }
        Ok(KPoly::new(k, r))
    }

    pub fn monic(&self, k: &NumberFieldAbs) -> Result<KPoly> {
        let inv = k.inv(&self.lc())?;
        Ok(KPoly::new(k, self.coeffs.iter().map(|c| k.mul(c, &inv)).collect()))
    }

    pub fn gcd(&self, o: &KPoly, k: &NumberFieldAbs) -> Result<KPoly> {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b, k)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        a.monic(k)
    }

    /// Specializes `a ↦ r` for a rational root `r` (only for degree-1 bases).
    pub fn at_rational(&self, r: &Rational) -> PolyQ {
        PolyQ::new(self.coeffs.iter().map(|c| c.eval(r)).collect())
    }

    pub fn display(&self, var: &str, coef_var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts: Vec<String> = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            let cs = c.display_var(coef_var);
            let term = if i == 0 {
                if c.is_constant() { cs } else { format!("({cs})") }
            } else if c.is_constant() && c.coeff(0).is_one() {
                mono
            } else if c.is_constant() && c.coeff(0) == -Rational::one() {
                format!("-{mono}")
            } else if c.is_constant() {
                format!("{cs}*{mono}")
            } else {
                format!("({cs})*{mono}")
            };
            parts.push(term);
        }
        let mut out = parts[0].clone();
        for t in &parts[1..] {
            if let Some(rest) = t.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(t);
            }
        }
        out
    }
}

/// `Res_x(a, b)` in k by the Euclidean recursion.
pub fn k_resultant(a: &KPoly, b: &KPoly, k: &NumberFieldAbs) -> Result<PolyQ> {
    if a.is_zero() || b.is_zero() {
        return Ok(PolyQ::zero());
    }
    let mut a = a.clone();
    let mut b = b.clone();
    let mut acc = PolyQ::one();
    loop {
        let m = a.degree();
        let n = b.degree();
        if n == 0 {
            let mut p = PolyQ::one();
            for _ in 0..m {
                p = k.mul(&p, &b.lc());
            }
            return Ok(k.mul(&acc, &p));
        }
        let r = a.rem(&b, k)?;
        if r.is_zero() {
            return Ok(PolyQ::zero());
        }
        let kk = r.degree();
        if (m * n) % 2 == 1 {
            acc = -&acc;
        }
        for _ in 0..(m - kk) {
            acc = k.mul(&acc, &b.lc());
        }
        a = b;
        b = r;
    }
}

/// Number of real roots of `g` under the real embedding `a ↦ ρ`, by a Sturm
/// sequence computed in k and signed at ρ. `g` must be squarefree over k.
pub fn real_root_count_at(g: &KPoly, k: &NumberFieldAbs, rho: &mut RealAlgebraic) -> Result<usize> {
    let mut seq = vec![g.clone(), g.derivative(k)];
    while seq.last().unwrap().degree() > 0 {
        let n = seq.len();
        let r = seq[n - 2].rem(&seq[n - 1], k)?;
        if r.is_zero() {
            break;
        }
        seq.push(KPoly::new(k, r.coeffs.iter().map(|c| -c).collect()));
    }
    if seq.last().unwrap().degree() > 0 {
        return Err(Error::domain("relative polynomial is not squarefree over the base field"));
    }
    let mut signs_pos = Vec::new();
    let mut signs_neg = Vec::new();
    for s in &seq {
        let sg = rho.sign_of(&s.lc());
        signs_pos.push(sg);
        signs_neg.push(if s.degree() % 2 == 1 { -sg } else { sg });
    }
    let changes = |v: &[i8]| {
        let nz: Vec<i8> = v.iter().copied().filter(|&s| s != 0).collect();
        nz.windows(2).filter(|w| w[0] != w[1]).count()
    };
    Ok(changes(&signs_neg) - changes(&signs_pos))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeOneVerdict {
    Yes,
    No,
    Undetermined,
}

struct RelInner {
    base: NumberFieldAbs,
    g: KPoly,
    disc: PolyQ,
    ramified: OnceLock<std::result::Result<Vec<u64>, Error>>,
}

/// L = k[x]/(g) for a monic squarefree g over k = ℚ[t]/(P).
#[derive(Clone)]
pub struct RelativeExtension(Arc<RelInner>);

impl fmt::Debug for RelativeExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RelativeExtension({} over {:?})", self.0.g.display("x", "a"), self.0.base)
    }
}

impl RelativeExtension {
    /// `coeffs[j]` is the coefficient of `x^j`, a polynomial in `a`.
    pub fn new(base: NumberFieldAbs, coeffs: Vec<PolyQ>) -> Result<Self> {
        let g = KPoly::new(&base, coeffs);
        if g.is_zero() || g.degree() == 0 {
            return Err(Error::domain("relative polynomial must have positive degree"));
        }
        if g.lc() != PolyQ::one() {
            return Err(Error::domain(format!(
                "relative polynomial {} must be monic",
                g.display("x", "a")
            )));
        }
        let disc = if g.degree() == 1 {
            PolyQ::one()
        } else {
            let n = g.degree();
            let r = k_resultant(&g, &g.derivative(&base), &base)?;
            if (n * (n - 1) / 2) % 2 == 1 {
                -&r
            } else {
                r
            }
        };
        if disc.is_zero() {
            return Err(Error::domain(format!(
                "relative polynomial {} is not squarefree over the base",
                g.display("x", "a")
            )));
        }
        if base.degree() == 1 {
            let r = -base.poly().coeff(0);
            certify_irreducible(&g.at_rational(&r))?;
        }
        Ok(RelativeExtension(Arc::new(RelInner {
            base,
            g,
            disc,
            ramified: OnceLock::new(),
        })))
    }

    pub fn base(&self) -> &NumberFieldAbs {
        &self.0.base
    }

    pub fn g(&self) -> &KPoly {
        &self.0.g
    }

    pub fn degree(&self) -> usize {
        self.0.g.degree()
    }

    /// Relative discriminant of g as an element of k.
    pub fn discriminant(&self) -> &PolyQ {
        &self.0.disc
    }

    pub fn display(&self) -> String {
        self.0.g.display("x", "a")
    }

    /// Primes where L/k may ramify in this presentation: bad primes of the
    /// base, denominators of g, and divisors of the norm of disc(g).
    pub fn ramified_primes(&self) -> Result<Vec<u64>> {
        self.0
            .ramified
            .get_or_init(|| {
                let k = &self.0.base;
                let mut out = k.bad_primes()?;
                let n = k.norm(&self.0.disc);
                let mut q = n;
                for c in &self.0.g.coeffs {
                    for x in c.coeffs() {
                        q *= Rational::from_integer(x.denom().clone());
                    }
                }
                for (p, _) in crate::arith::factor(&q)?.factors {
                    out.push(p.to_u64().ok_or_else(|| Error::domain("ramified prime exceeds 64 bits"))?);
                }
                out.sort_unstable();
                out.dedup();
                Ok(out)
            })
            .clone()
    }

    /// ḡ over the residue field at `w`; `None` when a coefficient is not
    /// w-integral in this presentation.
    pub fn reduce_at(&self, w: &PlaceAbove) -> Option<PolyFq<crate::poly::FqField>> {
        let field = w.residue_field();
        let mut coeffs = Vec::new();
        for c in &self.0.g.coeffs {
            coeffs.push(self.0.base.reduce_at(c, w)?);
        }
        Some(PolyFq::new(field, coeffs))
    }

    /// Degrees of the places of L above `w` when L/k is unramified there.
    pub fn residue_degrees_over(&self, w: &PlaceAbove) -> Result<Option<Vec<usize>>> {
        let Some(gbar) = self.reduce_at(w) else {
            return Ok(None);
        };
        if gbar.degree() != self.degree() || !gbar.is_squarefree() {
            return Ok(None);
        }
        Ok(Some(factor_degrees(&gbar)?))
    }

    /// Yes iff ḡ is squarefree with a root in the residue field at `w`;
    /// Undetermined when ḡ is not squarefree (possible relative ramification).
    pub fn has_degree_one_place_over(&self, w: &PlaceAbove) -> DegreeOneVerdict {
        if self.degree() == 1 {
            return DegreeOneVerdict::Yes;
        }
        let Some(gbar) = self.reduce_at(w) else {
            return DegreeOneVerdict::Undetermined;
        };
        if gbar.degree() != self.degree() || !gbar.is_squarefree() {
            return DegreeOneVerdict::Undetermined;
        }
        match roots_in_field(&gbar) {
            Ok(r) if !r.is_empty() => DegreeOneVerdict::Yes,
            Ok(_) => DegreeOneVerdict::No,
            Err(_) => DegreeOneVerdict::Undetermined,
        }
    }

    /// Whether L has a real place above the real place `a ↦ ρ` of k.
    pub fn has_real_place_over(&self, rho: &mut RealAlgebraic) -> Result<bool> {
        if self.degree() % 2 == 1 {
            return Ok(true);
        }
        Ok(real_root_count_at(&self.0.g, &self.0.base, rho)? > 0)
    }

    /// g at `a = r` when the base is ℚ (`P = t − r`).
    pub fn over_q(&self) -> Option<PolyQ> {
        let k = &self.0.base;
        (k.degree() == 1).then(|| self.0.g.at_rational(&-k.poly().coeff(0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn qsqrt2() -> NumberFieldAbs {
        NumberFieldAbs::from_ints(&[-2, 0, 1]).unwrap()
    }

    fn poly_a(c: &[i64]) -> PolyQ {
        PolyQ::from_ints(c)
    }

    #[test]
    fn degree_one_examples() {
        let k = qsqrt2();
        // g = x² − a over ℚ(√2).
        let l = RelativeExtension::new(k.clone(), vec![poly_a(&[0, -1]), poly_a(&[0]), poly_a(&[1])]).unwrap();
        let squares: Vec<u64> = (1..7).map(|x| x * x % 7).collect();
        assert!(!squares.contains(&3) && squares.contains(&4));
        let w3 = k.positive_valuation_place(&rat(3, 1), 7).unwrap().unwrap();
        assert_eq!(l.has_degree_one_place_over(&w3), DegreeOneVerdict::No);
        let w4 = k.positive_valuation_place(&rat(4, 1), 7).unwrap().unwrap();
        assert_eq!(l.has_degree_one_place_over(&w4), DegreeOneVerdict::Yes);

        let q = NumberFieldAbs::from_ints(&[0, 1]).unwrap();
        let gauss = RelativeExtension::new(q.clone(), vec![poly_a(&[1]), poly_a(&[0]), poly_a(&[1])]).unwrap();
        let w13 = &q.places_above(13).unwrap()[0];
        assert_eq!(gauss.has_degree_one_place_over(w13), DegreeOneVerdict::Yes);
        let w2 = &q.places_above(2).unwrap()[0];
        assert_eq!(gauss.has_degree_one_place_over(w2), DegreeOneVerdict::Undetermined);
        assert_eq!(gauss.ramified_primes().unwrap(), vec![2]);
    }

    #[test]
    fn linear_relative_is_always_yes() {
        let k = qsqrt2();
        let l = RelativeExtension::new(k.clone(), vec![poly_a(&[5, 3]), poly_a(&[1])]).unwrap();
        for p in [7u64, 17, 23] {
            for w in k.places_above(p).unwrap().iter() {
                assert_eq!(l.has_degree_one_place_over(w), DegreeOneVerdict::Yes);
            }
        }
    }

    #[test]
    fn real_places_of_relative_extension() {
        let k = qsqrt2();
        // x² − a: real over ρ = √2, not over ρ = −√2.
        let l = RelativeExtension::new(k.clone(), vec![poly_a(&[0, -1]), poly_a(&[0]), poly_a(&[1])]).unwrap();
        let mut roots = k.real_roots();
        assert_eq!(roots.len(), 2);
        assert!(!l.has_real_place_over(&mut roots[0]).unwrap());
        assert!(l.has_real_place_over(&mut roots[1]).unwrap());
        assert_eq!(l.display(), "x^2 + (-a)");
    }

    #[test]
    fn rejects_reducible_over_q() {
        let q = NumberFieldAbs::from_ints(&[0, 1]).unwrap();
        assert!(RelativeExtension::new(q, vec![poly_a(&[-4]), poly_a(&[0]), poly_a(&[1])]).is_err());
    }
}
