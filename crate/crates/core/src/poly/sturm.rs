//! Sturm sequences and exact real-root isolation.

use std::cmp::Ordering;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::PolyQ;
use crate::arith::{rat_int, sign_of, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SturmSequence {
    seq: Vec<PolyQ>,
}

fn changes(signs: impl Iterator<Item = i8>) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            n += 1;
        }
        last = s;
    }
    n
}

impl SturmSequence {
    /// Canonical sequence `f, f′, −rem(f, f′), …`. Requires `f` squarefree.
    pub fn new(f: &PolyQ) -> Result<Self> {
        if f.is_zero() {
            return Err(Error::domain("Sturm sequence of the zero polynomial"));
        }
        if !f.is_squarefree() {
            return Err(Error::domain(
                "polynomial is not squarefree; reduce with squarefree_part() first",
            ));
        }
        let mut seq = vec![f.clone(), f.derivative()];
        while !seq.last().unwrap().is_zero() && !seq.last().unwrap().is_constant() {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]);
            // Positive rescaling keeps signs and stops coefficient growth.
            let r = if r.is_zero() {
                r
            } else {
                let lc = r.lc().abs();
                r.scale(&lc.recip())
            };
            seq.push(-&r);
        }
        if seq.last().unwrap().is_zero() {
            seq.pop();
        }
        Ok(SturmSequence { seq })
    }

    pub fn changes_at(&self, x: &Rational) -> usize {
        changes(self.seq.iter().map(|p| sign_of(&p.eval(x))))
    }

    pub fn changes_at_infinity(&self, positive: bool) -> usize {
        changes(self.seq.iter().map(|p| {
            let s = sign_of(&p.lc());
            if !positive && p.degree() % 2 == 1 {
                -s
            } else {
                s
            }
        }))
    }

    /// Roots in the half-open interval `(lo, hi]`.
    pub fn count_half_open(&self, lo: &Rational, hi: &Rational) -> usize {
        self.changes_at(lo).saturating_sub(self.changes_at(hi))
    }

    pub fn count_all(&self) -> usize {
        self.changes_at_infinity(false) - self.changes_at_infinity(true)
    }

    /// Roots in the open interval `(lo, hi)`.
    pub fn count_open(&self, lo: &Rational, hi: &Rational) -> usize {
        if lo >= hi {
            return 0;
        }
        let c = self.count_half_open(lo, hi);
        if self.seq[0].eval(hi).is_zero() {
            c - 1
        } else {
            c
        }
    }
}

/// Number of distinct real roots of a squarefree `f`, optionally restricted to
/// the open interval `(lo, hi)`.
pub fn count_real_roots(f: &PolyQ, interval: Option<(&Rational, &Rational)>) -> Result<usize> {
    let s = SturmSequence::new(f)?;
    Ok(match interval {
        None => s.count_all(),
        Some((lo, hi)) => s.count_open(lo, hi),
    })
}

/// `1 + max |cᵢ / c_n|`: every root lies strictly inside `(−B, B)`.
pub fn cauchy_bound(f: &PolyQ) -> Rational {
    let lc = f.lc().abs();
    let m = f.coeffs()[..f.degree()]
        .iter()
        .map(|c| c.abs() / &lc)
        .max()
        .unwrap_or_else(Rational::zero);
    m + Rational::one()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealRoot {
    Exact {
        #[serde(serialize_with = "crate::ser::display")]
        value: Rational,
    },
    /// The unique root of the defining polynomial in the open interval.
    Interval {
        #[serde(serialize_with = "crate::ser::display")]
        lo: Rational,
        #[serde(serialize_with = "crate::ser::display")]
        hi: Rational,
    },
}

/// A real root of a squarefree rational polynomial, with an isolating interval
/// that can be refined on demand.
#[derive(Clone, Debug, Serialize)]
pub struct RealAlgebraic {
    #[serde(skip)]
    poly: PolyQ,
    pub root: RealRoot,
}

impl RealAlgebraic {
    pub fn poly(&self) -> &PolyQ {
        &self.poly
    }

    pub fn exact(&self) -> Option<&Rational> {
        match &self.root {
            RealRoot::Exact { value } => Some(value),
            RealRoot::Interval { .. } => None,
        }
    }

    /// Halves the isolating interval (or does nothing for an exact root).
    pub fn refine(&mut self) {
        if let RealRoot::Interval { lo, hi } = &self.root {
            let mid = (lo + hi) / rat_int(2);
            let fm = self.poly.eval(&mid);
            if fm.is_zero() {
                self.root = RealRoot::Exact { value: mid };
                return;
            }
            let flo = self.poly.eval(lo);
            self.root = if sign_of(&flo) != sign_of(&fm) {
                RealRoot::Interval { lo: lo.clone(), hi: mid }
            } else {
                RealRoot::Interval { lo: mid, hi: hi.clone() }
            };
        }
    }

    pub fn width(&self) -> Rational {
        match &self.root {
            RealRoot::Exact { .. } => Rational::zero(),
            RealRoot::Interval { lo, hi } => hi - lo,
        }
    }

    pub fn refine_to(&mut self, width: &Rational) {
        while self.width() > *width {
            self.refine();
        }
    }

    /// Comparison of the root with a rational, exact.
    pub fn cmp_rational(&mut self, t: &Rational) -> Ordering {
        loop {
            match &self.root {
                RealRoot::Exact { value } => return value.cmp(t),
                RealRoot::Interval { lo, hi } => {
                    if t <= lo {
                        return Ordering::Greater;
                    }
                    if t >= hi {
                        return Ordering::Less;
                    }
                    let ft = self.poly.eval(t);
                    if ft.is_zero() {
                        return Ordering::Equal;
                    }
                    // Split the interval at t itself.
                    let flo = self.poly.eval(lo);
                    self.root = if sign_of(&flo) != sign_of(&ft) {
                        RealRoot::Interval { lo: lo.clone(), hi: t.clone() }
                    } else {
                        RealRoot::Interval { lo: t.clone(), hi: hi.clone() }
                    };
                }
            }
        }
    }

    /// Exact sign of `g(ρ)`.
    pub fn sign_of(&mut self, g: &PolyQ) -> i8 {
        if g.is_zero() {
            return 0;
        }
        if let RealRoot::Exact { value } = &self.root {
            return sign_of(&g.eval(value));
        }
        let h = self.poly.gcd(g);
        if !h.is_constant() {
            if let RealRoot::Interval { lo, hi } = &self.root {
                let sh = SturmSequence::new(&h).expect("factor of squarefree is squarefree");
                if sh.count_open(lo, hi) > 0 {
                    return 0;
                }
            }
        }
        let gs = SturmSequence::new(&g.squarefree_part()).expect("squarefree part");
        loop {
            match &self.root {
                RealRoot::Exact { value } => return sign_of(&g.eval(value)),
                RealRoot::Interval { lo, hi } => {
                    let glo = g.eval(lo);
                    let ghi = g.eval(hi);
                    if !glo.is_zero() && !ghi.is_zero() && gs.count_open(lo, hi) == 0 {
                        return sign_of(&glo);
                    }
                }
            }
            self.refine();
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.root {
            RealRoot::Exact { value } => value.to_f64().unwrap_or(f64::NAN),
            RealRoot::Interval { lo, hi } => ((lo + hi) / rat_int(2)).to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// All real roots of a squarefree polynomial, ascending, each with an
/// isolating interval (or exact when a bisection point hits it).
pub fn real_roots(f: &PolyQ) -> Result<Vec<RealAlgebraic>> {
    let s = SturmSequence::new(f)?;
    let b = cauchy_bound(f);
    let mut out = Vec::new();
    let mut stack = vec![(-b.clone(), b)];
    while let Some((lo, hi)) = stack.pop() {
        let n = s.count_half_open(&lo, &hi);
        if n == 0 {
            continue;
        }
        if f.eval(&hi).is_zero() {
            out.push(RealRoot::Exact { value: hi.clone() });
            if n > 1 {
                let mid = (&lo + &hi) / rat_int(2);
                stack.push((lo, mid.clone()));
                stack.push((mid, hi.clone()));
            }
            continue;
        }
        if n == 1 && !f.eval(&lo).is_zero() {
            out.push(RealRoot::Interval { lo, hi });
            continue;
        }
        let mid = (&lo + &hi) / rat_int(2);
        stack.push((lo, mid.clone()));
        stack.push((mid, hi));
    }
    let key = |r: &RealRoot| match r {
        RealRoot::Exact { value } => value.clone(),
        RealRoot::Interval { lo, .. } => lo.clone(),
    };
    out.sort_by_key(key);
    out.dedup();
    Ok(out
        .into_iter()
        .map(|root| RealAlgebraic {
            poly: f.clone(),
            root,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> PolyQ {
        PolyQ::from_ints(c)
    }

    /// Sign changes of f on a grid of step 1/64 over the Cauchy radius.
    fn grid_sign_changes(f: &PolyQ) -> usize {
        let b = cauchy_bound(f).ceil().to_integer().to_i64().unwrap();
        let mut last = sign_of(&f.eval(&rat_int(-b)));
        let mut n = 0;
        for k in (-b * 64 + 1)..=(b * 64) {
            let s = sign_of(&f.eval(&rat(k, 64)));
            if s != 0 && last != 0 && s != last {
                n += 1;
            }
            if s != 0 {
                last = s;
            }
        }
        n
    }

    #[test]
    fn count_examples() {
        let f = p(&[-1, -1, 0, 1]);
        assert_eq!(count_real_roots(&f, None).unwrap(), 1);
        assert_eq!(grid_sign_changes(&f), 1);
        assert_eq!(count_real_roots(&p(&[1, 0, 1]), None).unwrap(), 0);
        assert_eq!(count_real_roots(&p(&[-2, 0, 1]), Some((&rat(0, 1), &rat(2, 1)))).unwrap(), 1);
        assert!(count_real_roots(&p(&[1, -2, 1]), None).is_err());
    }

    #[test]
    fn exact_roots_found() {
        let f = &p(&[-1, 1]) * &p(&[2, 1]); // roots 1, −2
        let r = real_roots(&(&f * &p(&[-2, 0, 1]))).unwrap();
        assert_eq!(r.len(), 4);
        let mut signs = Vec::new();
        for mut x in r {
            signs.push(x.cmp_rational(&rat(0, 1)));
        }
        assert_eq!(
            signs,
            vec![Ordering::Less, Ordering::Less, Ordering::Greater, Ordering::Greater]
        );
    }

    #[test]
    fn sign_at_sqrt2() {
        let f = p(&[-2, 0, 1]);
        let mut roots = real_roots(&f).unwrap();
        let mut pos = roots.pop().unwrap();
        assert_eq!(pos.sign_of(&p(&[-3, 2])), -1); // 2√2 − 3 < 0
        assert_eq!(pos.sign_of(&p(&[-2, 0, 1])), 0);
        assert_eq!(pos.sign_of(&p(&[-1, 1])), 1);
        assert_eq!(pos.cmp_rational(&rat(141, 100)), Ordering::Greater);
        assert_eq!(pos.cmp_rational(&rat(142, 100)), Ordering::Less);
    }

    fn numeric_real_roots(c: &[f64]) -> usize {
        // Companion-free oracle: dense sampling plus sign changes in f64.
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let bound = 1.0 + c[..c.len() - 1].iter().map(|k| (k / c[c.len() - 1]).abs()).fold(0.0, f64::max);
        let steps = 200_000;
        let mut n = 0;
        let mut last = f(-bound).signum();
        for i in 1..=steps {
            let x = -bound + 2.0 * bound * i as f64 / steps as f64;
            let s = f(x);
            if s != 0.0 && s.signum() != last {
                n += 1;
                last = s.signum();
            }
        }
        n
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn real_plus_complex_pairs_is_degree(v in proptest::collection::vec(-9i64..=9, 2..7)) {
            let mut v = v;
            if *v.last().unwrap() == 0 { *v.last_mut().unwrap() = 1; }
            let f = PolyQ::from_ints(&v).squarefree_part();
            prop_assume!(f.degree() >= 1);
            let n = count_real_roots(&f, None).unwrap();
            prop_assert_eq!((f.degree() - n) % 2, 0);
            let roots = real_roots(&f).unwrap();
            prop_assert_eq!(roots.len(), n);
            // Numeric oracle; skip ill-conditioned cases with nearly touching roots.
            let fc: Vec<f64> = f.coeffs().iter().map(|c| c.to_f64().unwrap()).collect();
            let disc = crate::poly::discriminant(&f).unwrap().abs();
            if disc > rat(1, 1000) {
                prop_assert_eq!(numeric_real_roots(&fc), n);
            }
        }
    }
}
