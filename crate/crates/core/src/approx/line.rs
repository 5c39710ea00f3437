//! Strong approximation off v0 on affine n-space minus a finite union of
//! codimension-2 linear subspaces, through a line joining two rational points.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{crt_class, denominator_primes, integral_outside, nearest_in_class, weak_approximation, Condition};
use crate::arith::{pow_big, valuation_unchecked, Rational};
use crate::error::{Error, Result};
use crate::local::{PlaceOfQ, Precision};

/// An affine-linear form `c_0 + c_1 x_1 + … + c_n x_n`.
pub type AffineForm = Vec<Rational>;

fn eval(form: &AffineForm, x: &[Rational]) -> Rational {
    let mut acc = form[0].clone();
    for (c, xi) in form[1..].iter().zip(x) {
        acc += c * xi;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointTarget {
    pub place: PlaceOfQ,
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub point: Vec<Rational>,
    #[serde(skip)]
    pub precision: Precision,
}

#[derive(Clone, Debug)]
pub struct PuncturedAffineProblem {
    dimension: usize,
    excluded: Vec<(AffineForm, AffineForm)>,
    s: BTreeSet<PlaceOfQ>,
    targets: Vec<PointTarget>,
    v0: PlaceOfQ,
}

impl PuncturedAffineProblem {
    /// S is enlarged by the real place, v0 and the target places.
    pub fn new(
        dimension: usize,
        excluded: Vec<(AffineForm, AffineForm)>,
        s: impl IntoIterator<Item = PlaceOfQ>,
        targets: Vec<PointTarget>,
        v0: PlaceOfQ,
    ) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::domain("dimension must be at least 2: no codimension-2 locus exists otherwise"));
        }
        for (i, (f, g)) in excluded.iter().enumerate() {
            if f.len() != dimension + 1 || g.len() != dimension + 1 {
                return Err(Error::domain(format!("constraint {i} must have {} coefficients", dimension + 1)));
            }
            let independent = (1..=dimension).any(|a| (a + 1..=dimension).any(|b| &f[a] * &g[b] != &f[b] * &g[a]));
            if !independent {
                return Err(Error::domain(format!("constraint {i} does not cut out codimension 2")));
            }
        }
        let mut s: BTreeSet<PlaceOfQ> = s.into_iter().collect();
        s.insert(PlaceOfQ::Real);
        s.insert(v0);
        let mut seen = BTreeSet::new();
        for t in &targets {
            if t.place == v0 {
                return Err(Error::domain("no target may be set at v0"));
            }
            if !seen.insert(t.place) {
                return Err(Error::domain(format!("two targets at {}", t.place)));
            }
            if t.point.len() != dimension {
                return Err(Error::domain(format!("target at {} has the wrong dimension", t.place)));
            }
            match (&t.precision, t.place) {
                (Precision::Adic(n), PlaceOfQ::Finite(_)) if *n >= 1 => {}
                (Precision::Real(e), PlaceOfQ::Real) if e.is_positive() => {}
                _ => return Err(Error::domain(format!("bad precision at {}", t.place))),
            }
            if excluded.iter().any(|(f, g)| eval(f, &t.point).is_zero() && eval(g, &t.point).is_zero()) {
                return Err(Error::domain(format!("target at {} lies on the excluded locus", t.place)));
            }
            s.insert(t.place);
        }
        Ok(PuncturedAffineProblem {
            dimension,
            excluded,
            s,
            targets,
            v0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn s(&self) -> &BTreeSet<PlaceOfQ> {
        &self.s
    }

    pub fn v0(&self) -> PlaceOfQ {
        self.v0
    }

    pub fn targets(&self) -> &[PointTarget] {
        &self.targets
    }

    fn s_primes(&self) -> BTreeSet<u64> {
        self.s.iter().filter_map(|v| v.prime()).collect()
    }

    pub fn on_excluded(&self, x: &[Rational]) -> bool {
        self.excluded.iter().any(|(f, g)| eval(f, x).is_zero() && eval(g, x).is_zero())
    }

    /// Whether the line through `q` and `q2` misses every excluded subspace.
    fn line_avoids(&self, q: &[Rational], q2: &[Rational]) -> bool {
        self.excluded.iter().all(|(f, g)| {
            let a = eval(f, q);
            let b = eval(f, q2) - &a;
            let c = eval(g, q);
            let e = eval(g, q2) - &c;
            if b.is_zero() && e.is_zero() {
                !(a.is_zero() && c.is_zero())
            } else {
                &a * &e != &b * &c
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineTrickSolution {
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub point: Vec<Rational>,
    /// The weak-approximation point Q.
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub q: Vec<Rational>,
    /// The auxiliary integral point Q'.
    #[serde(serialize_with = "crate::ser::display_vec")]
    pub q_prime: Vec<Rational>,
    /// `point = Q + s (Q' − Q)`.
    #[serde(serialize_with = "crate::ser::display")]
    pub s: Rational,
    /// Primes outside S where Q is not integral.
    pub extra_primes: Vec<u64>,
    pub attempts: usize,
}

const MAX_ATTEMPTS: usize = 64;

/// Q by weak approximation, Q' a random integral point in general position,
/// then the line parameter by CRT so that the point is close to Q at
/// S ∖ {v0}, integral at the primes where Q is not, and integral elsewhere
/// outside S.
pub fn line_trick_solve(prob: &PuncturedAffineProblem, seed: u64) -> Result<LineTrickSolution> {
    let n = prob.dimension;
    let s_primes = prob.s_primes();
    let mut q = Vec::new();
    let mut tighten = 0i64;
    loop {
        q.clear();
        for j in 0..n {
            let conds: Vec<Condition> = prob
                .targets
                .iter()
                .map(|t| Condition {
                    place: t.place,
                    t: t.point[j].clone(),
                    precision: match &t.precision {
                        Precision::Adic(k) => Precision::Adic(k + tighten),
                        Precision::Real(e) => {
                            Precision::Real(e / Rational::from_integer(BigInt::from(2) << tighten as usize))
                        }
                        Precision::Exact => Precision::Exact,
                    },
                })
                .collect();
            q.push(weak_approximation(&conds, &s_primes)?);
        }
        if !prob.on_excluded(&q) {
            break;
        }
        tighten += 1;
        if tighten as usize > MAX_ATTEMPTS {
            return Err(Error::RetryExhausted("weak approximation kept landing on the excluded locus".into()));
        }
    }
    let mut extra: BTreeSet<u64> = BTreeSet::new();
    for x in &q {
        for (p, _) in denominator_primes(x)? {
            if !s_primes.contains(&p) {
                extra.insert(p);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..MAX_ATTEMPTS {
        let r = 4 * (attempt as i64 + 1);
        let q2: Vec<Rational> = (0..n).map(|_| Rational::from_integer(rng.gen_range(-r..=r).into())).collect();
        if q2 == q || !prob.line_avoids(&q, &q2) {
            continue;
        }
        let diff: Vec<Rational> = q2.iter().zip(&q).map(|(a, b)| a - b).collect();
        if let Some(s) = line_parameter(prob, &diff, &extra)? {
            let point: Vec<Rational> = q.iter().zip(&diff).map(|(a, d)| a + &s * d).collect();
            let sol = LineTrickSolution {
                point,
                q: q.clone(),
                q_prime: q2,
                s,
                extra_primes: extra.iter().copied().collect(),
                attempts: attempt + 1,
            };
            if verify_line_solution(prob, &sol) {
                return Ok(sol);
            }
        }
    }
    Err(Error::RetryExhausted(format!("no line in general position after {MAX_ATTEMPTS} attempts")))
}

fn min_valuation(diff: &[Rational], p: u64) -> Option<i64> {
    diff.iter().filter_map(|d| valuation_unchecked(d, p).finite()).min()
}

/// `s = λ / v0^k` with `s` small at each target place and `s ≡ 1` deep
/// enough at each extra prime.
fn line_parameter(prob: &PuncturedAffineProblem, diff: &[Rational], extra: &BTreeSet<u64>) -> Result<Option<Rational>> {
    let mut conds = Vec::new();
    let mut real_bound = None;
    for t in &prob.targets {
        match (t.place, &t.precision) {
            (PlaceOfQ::Finite(p), Precision::Adic(nv)) => {
                let Some(m) = min_valuation(diff, p) else { continue };
                let need = (nv - m).max(0);
                if need > 0 {
                    conds.push(Condition {
                        place: t.place,
                        t: Rational::zero(),
                        precision: Precision::Adic(need),
                    });
                }
            }
            (PlaceOfQ::Real, Precision::Real(eps)) => {
                let width = diff.iter().map(|d| d.abs()).max().unwrap_or_default();
                if !width.is_zero() {
                    real_bound = Some(eps / (Rational::from_integer(2.into()) * width));
                }
            }
            _ => {}
        }
    }
    let mut one_conds = Vec::new();
    for &p in extra {
        let m = min_valuation(diff, p).unwrap_or(0);
        if m < 0 {
            one_conds.push((p, -m));
        }
    }
    let v0 = prob.v0.prime();
    let mut k = 0u32;
    loop {
        let scale = match v0 {
            Some(p) => pow_big(&BigInt::from(p), k),
            None => BigInt::one(),
        };
        let scale_q = Rational::from_integer(scale.clone());
        // λ ≡ 0 at target primes, λ ≡ v0^k at extra primes.
        let mut all = conds.clone();
        for &(p, e) in &one_conds {
            all.push(Condition {
                place: PlaceOfQ::Finite(p),
                t: scale_q.clone(),
                precision: Precision::Adic(e),
            });
        }
        let (r0, m, den) = crt_class(&all)?;
        debug_assert!(den.is_one());
        let lam = nearest_in_class(&Rational::zero(), &r0, &m);
        let s = Rational::new(lam, scale.clone());
        match (&real_bound, v0) {
            (Some(b), Some(_)) if s.abs() > *b => {
                k += 1;
                if k > 4096 {
                    return Ok(None);
                }
                continue;
            }
            (Some(b), None) if s.abs() > *b => return Ok(None),
            _ => return Ok(Some(s)),
        }
    }
}

/// Re-checks closeness at every target, avoidance of the excluded locus and
/// integrality outside S.
pub fn verify_line_solution(prob: &PuncturedAffineProblem, sol: &LineTrickSolution) -> bool {
    if sol.point.len() != prob.dimension || prob.on_excluded(&sol.point) {
        return false;
    }
    let close = prob.targets.iter().all(|t| {
        sol.point.iter().zip(&t.point).all(|(x, y)| {
            Condition {
                place: t.place,
                t: y.clone(),
                precision: t.precision.clone(),
            }
            .holds(x)
        })
    });
    let primes = prob.s_primes();
    close && sol.point.iter().all(|x| integral_outside(x, &primes))
}
