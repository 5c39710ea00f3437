//! Finite fields 𝔽_p and 𝔽_{p^f}, polynomials over them, and factorization by
//! squarefree decomposition, distinct-degree splitting and Cantor–Zassenhaus.

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::factor::{inv_mod_u64, is_prime_u64, mul_mod, pow_mod};
use crate::error::{Error, Result};

pub trait FiniteField: Clone + fmt::Debug + Send + Sync {
    type Elem: Clone + PartialEq + Eq + Ord + Hash + fmt::Debug + Send + Sync;

    fn characteristic(&self) -> u64;
    fn degree(&self) -> u32;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    /// Image of an integer residue (already reduced mod p).
    fn from_u64(&self, n: u64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn random(&self, rng: &mut ChaCha8Rng) -> Self::Elem;
    fn fmt_elem(&self, a: &Self::Elem) -> String;

    fn order(&self) -> BigUint {
        BigUint::from(self.characteristic()).pow(self.degree())
    }

    fn pow(&self, a: &Self::Elem, e: &BigUint) -> Self::Elem {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.mul(&acc, &acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem> {
        if self.is_zero(a) {
            return None;
        }
        Some(self.pow(a, &(self.order() - 2u32)))
    }

    /// The unique `b` with `b^p = a`.
    fn pth_root(&self, a: &Self::Elem) -> Self::Elem {
        self.pow(a, &(self.order() / self.characteristic()))
    }

    /// Every element (only sensible for small fields).
    fn elements(&self) -> Vec<Self::Elem>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::domain(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn reduce_i64(&self, n: i64) -> u64 {
        n.rem_euclid(self.p as i64) as u64
    }
}

impl FiniteField for PrimeField {
    type Elem = u64;

    fn characteristic(&self) -> u64 {
        self.p
    }
    fn degree(&self) -> u32 {
        1
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_u64(&self, n: u64) -> u64 {
        n % self.p
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.p as u128) as u64
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        mul_mod(*a, *b, self.p)
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn random(&self, rng: &mut ChaCha8Rng) -> u64 {
        rng.gen_range(0..self.p)
    }
    fn fmt_elem(&self, a: &u64) -> String {
        a.to_string()
    }
    fn pow(&self, a: &u64, e: &BigUint) -> u64 {
        if *a == 0 {
            return if e.is_zero() { 1 } else { 0 };
        }
        let e = e % (self.p - 1).max(1);
        pow_mod(*a, e.to_u64().unwrap(), self.p)
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        inv_mod_u64(*a, self.p)
    }
    fn pth_root(&self, a: &u64) -> u64 {
        *a
    }
    fn elements(&self) -> Vec<u64> {
        (0..self.p).collect()
    }
}

#[derive(Debug)]
struct FqInner {
    base: PrimeField,
    /// Monic irreducible modulus, ascending coefficients, length f + 1.
    h: Vec<u64>,
}

/// 𝔽_p[u]/(h) for a monic irreducible `h`; elements are coefficient vectors of
/// length `f` in the basis `1, u, …, u^{f−1}`.
#[derive(Clone, Debug)]
pub struct FqField(Arc<FqInner>);

impl PartialEq for FqField {
    fn eq(&self, o: &Self) -> bool {
        self.0.base == o.0.base && self.0.h == o.0.h
    }
}
impl Eq for FqField {}

impl FqField {
    /// Checks irreducibility of `h` by factoring it over 𝔽_p.
    pub fn new(p: u64, h: Vec<u64>) -> Result<Self> {
        let base = PrimeField::new(p)?;
        let hp = PolyFq::new(base, h.iter().map(|c| c % p).collect());
        if hp.is_zero() || hp.degree() == 0 || !hp.is_monic() {
            return Err(Error::domain("field modulus must be monic of positive degree"));
        }
        let fac = factor_mod(&hp)?;
        if fac.len() != 1 || fac[0].1 != 1 {
            return Err(Error::domain(format!(
                "{} is reducible over F_{p}",
                hp
            )));
        }
        Ok(Self::new_unchecked(base, hp.coeffs))
    }

    /// For moduli already known irreducible (factors from [`factor_mod`]).
    pub fn new_unchecked(base: PrimeField, h: Vec<u64>) -> Self {
        FqField(Arc::new(FqInner { base, h }))
    }

    pub fn base(&self) -> PrimeField {
        self.0.base
    }

    pub fn modulus(&self) -> &[u64] {
        &self.0.h
    }

    fn f(&self) -> usize {
        self.0.h.len() - 1
    }

    /// The generator `u` (class of the indeterminate).
    pub fn gen(&self) -> Vec<u64> {
        self.from_poly(&[0, 1])
    }

    /// Reduces an arbitrary polynomial in `u` (coefficients mod p).
    pub fn from_poly(&self, c: &[u64]) -> Vec<u64> {
        let k = self.0.base;
        let mut v: Vec<u64> = c.iter().map(|x| x % k.p).collect();
        self.reduce(&mut v);
        v
    }

    fn reduce(&self, v: &mut Vec<u64>) {
        let k = self.0.base;
        let h = &self.0.h;
        let f = self.f();
        while v.len() > f {
            let top = v.pop().unwrap();
            if top != 0 {
                let off = v.len() - f;
                for j in 0..f {
                    v[off + j] = k.sub(&v[off + j], &k.mul(&top, &h[j]));
                }
            }
        }
        v.resize(f, 0);
    }
}

impl FiniteField for FqField {
    type Elem = Vec<u64>;

    fn characteristic(&self) -> u64 {
        self.0.base.p
    }
    fn degree(&self) -> u32 {
        self.f() as u32
    }
    fn zero(&self) -> Vec<u64> {
        vec![0; self.f()]
    }
    fn one(&self) -> Vec<u64> {
        self.from_poly(&[1])
    }
    fn from_u64(&self, n: u64) -> Vec<u64> {
        self.from_poly(&[n])
    }
    fn add(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| self.0.base.add(x, y)).collect()
    }
    fn sub(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| self.0.base.sub(x, y)).collect()
    }
    fn mul(&self, a: &Vec<u64>, b: &Vec<u64>) -> Vec<u64> {
        let k = self.0.base;
        let f = self.f();
        let mut v = vec![0u64; 2 * f - 1];
        for (i, x) in a.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                v[i + j] = k.add(&v[i + j], &k.mul(x, y));
            }
        }
        self.reduce(&mut v);
        v
    }
    fn neg(&self, a: &Vec<u64>) -> Vec<u64> {
        a.iter().map(|x| self.0.base.neg(x)).collect()
    }
    fn is_zero(&self, a: &Vec<u64>) -> bool {
        a.iter().all(|x| *x == 0)
    }
    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<u64> {
        (0..self.f()).map(|_| rng.gen_range(0..self.0.base.p)).collect()
    }
    fn fmt_elem(&self, a: &Vec<u64>) -> String {
        let mut parts = Vec::new();
        for (i, c) in a.iter().enumerate().rev() {
            if *c == 0 {
                continue;
            }
            parts.push(match (i, c) {
                (0, _) => c.to_string(),
                (1, 1) => "u".into(),
                (1, _) => format!("{c}*u"),
                (_, 1) => format!("u^{i}"),
                _ => format!("{c}*u^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
    fn elements(&self) -> Vec<Vec<u64>> {
        let p = self.0.base.p;
        let f = self.f();
        let total = p.pow(f as u32);
        (0..total)
            .map(|mut n| {
                (0..f)
                    .map(|_| {
                        let d = n % p;
                        n /= p;
                        d
                    })
                    .collect()
            })
            .collect()
    }
}

/// Polynomial over a finite field, ascending coefficients, trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFq<F: FiniteField> {
    pub field: F,
    pub coeffs: Vec<F::Elem>,
}

impl<F: FiniteField> PolyFq<F> {
    pub fn new(field: F, mut coeffs: Vec<F::Elem>) -> Self {
        while coeffs.last().is_some_and(|c| field.is_zero(c)) {
            coeffs.pop();
        }
        PolyFq { field, coeffs }
    }

    pub fn zero(field: F) -> Self {
        PolyFq { field, coeffs: Vec::new() }
    }

    pub fn one(field: F) -> Self {
        let one = field.one();
        Self::new(field, vec![one])
    }

    pub fn x(field: F) -> Self {
        let (z, o) = (field.zero(), field.one());
        Self::new(field, vec![z, o])
    }

    pub fn constant(field: F, c: F::Elem) -> Self {
        Self::new(field, vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn lc(&self) -> F::Elem {
        self.coeffs.last().cloned().unwrap_or_else(|| self.field.zero())
    }

    pub fn is_monic(&self) -> bool {
        !self.is_zero() && self.lc() == self.field.one()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == self.field.one()
    }

    pub fn coeff(&self, i: usize) -> F::Elem {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.field.zero())
    }

    fn with(&self, coeffs: Vec<F::Elem>) -> Self {
        Self::new(self.field.clone(), coeffs)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        self.with((0..n).map(|i| self.field.add(&self.coeff(i), &o.coeff(i))).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        self.with((0..n).map(|i| self.field.sub(&self.coeff(i), &o.coeff(i))).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.field.clone());
        }
        let k = &self.field;
        let mut v = vec![k.zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if k.is_zero(a) {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = k.add(&v[i + j], &k.mul(a, b));
            }
        }
        self.with(v)
    }

    pub fn scale(&self, c: &F::Elem) -> Self {
        self.with(self.coeffs.iter().map(|x| self.field.mul(x, c)).collect())
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.field.inv(&self.lc()).expect("nonzero leading coefficient");
        self.scale(&inv)
    }

    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let k = &self.field;
        if self.is_zero() || self.degree() < d.degree() {
            return (Self::zero(k.clone()), self.clone());
        }
        let dd = d.degree();
        let inv = k.inv(&d.lc()).expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        let mut q = vec![k.zero(); self.degree() - dd + 1];
        for i in (0..q.len()).rev() {
            let c = k.mul(&r[i + dd], &inv);
            if !k.is_zero(&c) {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[i + j] = k.sub(&r[i + j], &k.mul(&c, dc));
                }
            }
            q[i] = c;
        }
        r.truncate(dd);
        (self.with(q), self.with(r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn derivative(&self) -> Self {
        let k = &self.field;
        self.with(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| k.mul(c, &k.from_u64(i as u64 % k.characteristic())))
                .collect(),
        )
    }

    pub fn eval(&self, x: &F::Elem) -> F::Elem {
        let k = &self.field;
        let mut acc = k.zero();
        for c in self.coeffs.iter().rev() {
            acc = k.add(&k.mul(&acc, x), c);
        }
        acc
    }

    pub fn mul_mod(&self, o: &Self, m: &Self) -> Self {
        self.mul(o).rem(m)
    }

    pub fn pow_mod(&self, e: &BigUint, m: &Self) -> Self {
        let mut acc = Self::one(self.field.clone()).rem(m);
        let base = self.rem(m);
        for i in (0..e.bits()).rev() {
            acc = acc.mul_mod(&acc, m);
            if e.bit(i) {
                acc = acc.mul_mod(&base, m);
            }
        }
        acc
    }

    pub fn is_squarefree(&self) -> bool {
        !self.is_zero() && self.gcd(&self.derivative()).degree() == 0
    }
}

impl<F: FiniteField> fmt::Display for PolyFq<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if self.field.is_zero(c) {
                continue;
            }
            let cs = self.field.fmt_elem(c);
            let cs = if cs.contains('+') { format!("({cs})") } else { cs };
            parts.push(match i {
                0 => cs,
                _ => {
                    let mono = if i == 1 { "x".to_string() } else { format!("x^{i}") };
                    if *c == self.field.one() {
                        mono
                    } else {
                        format!("{cs}*{mono}")
                    }
                }
            });
        }
        f.write_str(&parts.join(" + "))
    }
}

/// Squarefree decomposition of a monic polynomial: pairs `(g, m)` with
/// `f = ∏ g^m` and each `g` squarefree.
fn squarefree_decomposition<F: FiniteField>(f: &PolyFq<F>) -> Vec<(PolyFq<F>, u32)> {
    let k = f.field.clone();
    let p = k.characteristic();
    let mut out = Vec::new();
    let d = f.derivative();
    let mut c = f.gcd(&d);
    let mut w = f.div_rem(&c).0;
    let mut i = 1u32;
    while w.degree() > 0 {
        let y = w.gcd(&c);
        let z = w.div_rem(&y).0;
        if z.degree() > 0 {
            out.push((z.monic(), i));
        }
        i += 1;
        w = y;
        c = c.div_rem(&w).0;
    }
    if c.degree() > 0 {
        // c is a p-th power: take the root coefficientwise.
        let root: Vec<F::Elem> = c
            .coeffs
            .iter()
            .step_by(p as usize)
            .map(|x| k.pth_root(x))
            .collect();
        let r = PolyFq::new(k, root).monic();
        for (g, m) in squarefree_decomposition(&r) {
            out.push((g, m * p as u32));
        }
    }
    out
}

/// Distinct-degree factorization of a monic squarefree polynomial.
fn distinct_degree<F: FiniteField>(f: &PolyFq<F>) -> Vec<(PolyFq<F>, usize)> {
    let k = f.field.clone();
    let q = k.order();
    let x = PolyFq::x(k);
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = x.rem(&rest);
    let mut d = 0;
    while rest.degree() >= 2 * (d + 1) {
        d += 1;
        h = h.pow_mod(&q, &rest);
        let g = h.sub(&x).gcd(&rest);
        if g.degree() > 0 {
            rest = rest.div_rem(&g).0;
            h = h.rem(&rest);
            out.push((g, d));
        }
    }
    if rest.degree() > 0 {
        let n = rest.degree();
        out.push((rest, n));
    }
    out
}

/// Splits a product of distinct monic irreducibles of degree `d`.
fn equal_degree<F: FiniteField>(f: &PolyFq<F>, d: usize, rng: &mut ChaCha8Rng) -> Vec<PolyFq<F>> {
    let n = f.degree();
    if n == d {
        return vec![f.clone()];
    }
    let k = f.field.clone();
    let q = k.order();
    let p = k.characteristic();
    loop {
        let a = PolyFq::new(k.clone(), (0..n).map(|_| k.random(rng)).collect());
        if a.degree() == 0 {
            continue;
        }
        let b = if p == 2 {
            // Absolute trace to 𝔽₂: a + a² + … + a^{2^{fd−1}}.
            let m = k.degree() as usize * d;
            let two = BigUint::from(2u32);
            let mut t = a.rem(f);
            let mut acc = t.clone();
            for _ in 1..m {
                t = t.pow_mod(&two, f);
                acc = acc.add(&t);
            }
            acc
        } else {
            let e = (q.pow(d as u32) - BigUint::one()) / 2u32;
            a.pow_mod(&e, f).sub(&PolyFq::one(k.clone()))
        };
        let g = b.gcd(f);
        if g.degree() > 0 && g.degree() < n {
            let h = f.div_rem(&g).0;
            let mut out = equal_degree(&g, d, rng);
            out.extend(equal_degree(&h.monic(), d, rng));
            return out;
        }
    }
}

fn sort_key<F: FiniteField>(g: &PolyFq<F>) -> (usize, Vec<F::Elem>) {
    (g.degree(), g.coeffs.clone())
}

/// Monic irreducible factors with multiplicities, sorted by degree then
/// coefficients. The leading coefficient of `f` is dropped.
pub fn factor_mod_seeded<F: FiniteField>(f: &PolyFq<F>, seed: u64) -> Result<Vec<(PolyFq<F>, u32)>> {
    if f.is_zero() {
        return Err(Error::domain("cannot factor the zero polynomial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (g, m) in squarefree_decomposition(&f.monic()) {
        for (h, d) in distinct_degree(&g) {
            for irr in equal_degree(&h, d, &mut rng) {
                out.push((irr, m));
            }
        }
    }
    out.sort_by(|a, b| sort_key(&a.0).cmp(&sort_key(&b.0)));
    Ok(out)
}

pub fn factor_mod<F: FiniteField>(f: &PolyFq<F>) -> Result<Vec<(PolyFq<F>, u32)>> {
    factor_mod_seeded(f, 0x5f3c_91a7)
}

/// Degrees of the irreducible factors, with multiplicity, ascending.
pub fn factor_degrees<F: FiniteField>(f: &PolyFq<F>) -> Result<Vec<usize>> {
    let mut v = Vec::new();
    for (g, m) in factor_mod(f)? {
        for _ in 0..m {
            v.push(g.degree());
        }
    }
    v.sort_unstable();
    Ok(v)
}

/// Distinct roots in the coefficient field, sorted, each checked by evaluation.
pub fn roots_in_field<F: FiniteField>(f: &PolyFq<F>) -> Result<Vec<F::Elem>> {
    if f.is_zero() {
        return Err(Error::domain("roots of the zero polynomial"));
    }
    let k = f.field.clone();
    let fm = f.monic();
    if fm.degree() == 0 {
        return Ok(Vec::new());
    }
    let x = PolyFq::x(k.clone());
    let xq = x.pow_mod(&k.order(), &fm);
    let g = xq.sub(&x).gcd(&fm);
    if g.degree() == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x2b7e_1516);
    let mut roots: Vec<F::Elem> = equal_degree(&g, 1, &mut rng)
        .into_iter()
        .map(|l| k.neg(&l.coeff(0)))
        .collect();
    roots.sort();
    for r in &roots {
        if !k.is_zero(&f.eval(r)) {
            return Err(Error::Internal(format!("root check failed for {}", k.fmt_elem(r))));
        }
    }
    Ok(roots)
}

/// Reduces an integer polynomial mod p into 𝔽_p[x].
pub fn reduce_int_poly(p: PrimeField, c: &[num_bigint::BigInt]) -> PolyFq<PrimeField> {
    let pb = num_bigint::BigInt::from(p.p());
    PolyFq::new(
        p,
        c.iter()
            .map(|x| {
                use num_integer::Integer;
                x.mod_floor(&pb).to_u64().unwrap()
            })
            .collect(),
    )
}
