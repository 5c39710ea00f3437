//! The line-oriented instance format and a small polynomial expression parser.
//!
//! ```text
//! # Gaussian integers over ℚ
//! entry: P=t; g=x^2+1; b=1
//! S: real, 2
//! target: v=2 t=5/4 N=3
//! target: real t=10 eps=1/10
//! ```
//!
//! `P` is a polynomial in `t`, `g` a polynomial in `x` whose coefficients are
//! polynomials in `a`, and `b` a polynomial in `a`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::Rational;
use crate::error::{Error, Result};
use crate::local::PlaceOfQ;
use crate::poly::PolyQ;
use crate::split::{ConjectureInstance, Entry, LocalTarget};

/// Sparse polynomial in a fixed list of variables, keyed by exponent vector.
#[derive(Clone, Debug, PartialEq)]
struct MPoly(BTreeMap<Vec<u32>, Rational>);

impl MPoly {
    fn constant(c: Rational, nvars: usize) -> Self {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(vec![0; nvars], c);
        }
        MPoly(m)
    }

    fn var(i: usize, nvars: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MPoly(BTreeMap::from([(e, Rational::one())]))
    }

    fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.0.iter().next().unwrap();
                e.iter().all(|&d| d == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add(mut self, o: &MPoly, sign: i32) -> Self {
        for (e, c) in &o.0 {
            let entry = self.0.entry(e.clone()).or_insert_with(Rational::zero);
            if sign < 0 {
                *entry -= c;
            } else {
                *entry += c;
            }
            if entry.is_zero() {
                self.0.remove(e);
            }
        }
        self
    }

    fn mul(&self, o: &MPoly) -> Self {
        let mut out = MPoly(BTreeMap::new());
        for (e1, c1) in &self.0 {
            for (e2, c2) in &o.0 {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out = out.add(&MPoly(BTreeMap::from([(e, c1 * c2)])), 1);
            }
        }
        out
    }

    fn scale(&self, c: &Rational) -> Self {
        MPoly(self.0.iter().map(|(e, x)| (e.clone(), x * c)).collect())
    }

    fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a [&'a str],
}

fn tokenize(src: &str, line: usize, col0: usize) -> Result<(Vec<(Tok, usize)>, usize)> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            toks.push((Tok::Num(s.parse().unwrap()), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            toks.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(Error::parse(line, col, format!("unexpected character '{c}'")));
        }
    }
    Ok((toks, col0 + chars.len()))
}

impl<'a> Parser<'a> {
    fn new(src: &str, line: usize, col0: usize, vars: &'a [&'a str]) -> Result<Self> {
        let (toks, end_col) = tokenize(src, line, col0)?;
        Ok(Parser { toks, pos: 0, line, end_col, vars })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, self.col(), msg)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_all(mut self) -> Result<MPoly> {
        if self.toks.is_empty() {
            return Err(self.err("empty expression"));
        }
        let e = self.expr()?;
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected token"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<MPoly> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(&self.term()?, 1);
            } else if self.eat('-') {
                acc = acc.add(&self.term()?, -1);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<MPoly> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat('/') {
                let col = self.col();
                let d = self.unary()?;
                let c = d
                    .as_constant()
                    .ok_or_else(|| Error::parse(self.line, col, "can only divide by a constant"))?;
                if c.is_zero() {
                    return Err(Error::parse(self.line, col, "division by zero"));
                }
                acc = acc.scale(&c.recip());
            } else if matches!(self.peek(), Some(Tok::Num(_) | Tok::Ident(_)) | Some(Tok::Sym('('))) {
                acc = acc.mul(&self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<MPoly> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<MPoly> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                let e: u32 = n.try_into().map_err(|_| self.err("exponent too large"))?;
                if e > 4096 {
                    return Err(self.err("exponent too large"));
                }
                self.pos += 1;
                let mut acc = MPoly::constant(Rational::one(), self.vars.len());
                for _ in 0..e {
                    acc = acc.mul(&base);
                }
                Ok(acc)
            }
            _ => Err(self.err("expected a non-negative integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<MPoly> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(MPoly::constant(Rational::from_integer(n), self.vars.len()))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let i = self.vars.iter().position(|v| *v == name).ok_or_else(|| {
                    Error::parse(self.line, col, format!("unknown variable '{name}', expected one of {:?}", self.vars))
                })?;
                Ok(MPoly::var(i, self.vars.len()))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

fn univariate(m: &MPoly) -> PolyQ {
    let deg = m.0.keys().map(|e| e[0] as usize).max().unwrap_or(0);
    let mut c = vec![Rational::zero(); deg + 1];
    for (e, x) in &m.0 {
        c[e[0] as usize] += x;
    }
    PolyQ::new(c)
}

fn parse_at(src: &str, var: &str, line: usize, col: usize) -> Result<PolyQ> {
    let vars = [var];
    Ok(univariate(&Parser::new(src, line, col, &vars)?.parse_all()?))
}

/// `g` as coefficients in `x` (lowest first), each a polynomial in `a`.
fn parse_relative_at(src: &str, x: &str, a: &str, line: usize, col: usize) -> Result<Vec<PolyQ>> {
    let vars = [x, a];
    let m = Parser::new(src, line, col, &vars)?.parse_all()?;
    let deg = m.0.keys().map(|e| e[0] as usize).max().unwrap_or(0);
    let mut by_x: Vec<BTreeMap<Vec<u32>, Rational>> = vec![BTreeMap::new(); deg + 1];
    for (e, c) in m.0 {
        by_x[e[0] as usize].insert(vec![e[1]], c);
    }
    Ok(by_x.into_iter().map(|t| univariate(&MPoly(t))).collect())
}

/// A polynomial in one variable, e.g. `t^3 - t - 1` or `(1/2)*a + 3`.
pub fn parse_poly(src: &str, var: &str) -> Result<PolyQ> {
    parse_at(src, var, 1, 1)
}

/// A polynomial in `x` with coefficients polynomials in `a`, lowest `x`-degree first.
pub fn parse_relative(src: &str, x: &str, a: &str) -> Result<Vec<PolyQ>> {
    parse_relative_at(src, x, a, 1, 1)
}

/// A rational constant such as `-5/4`, `10` or `1/(2*5)`.
pub fn parse_rational(src: &str) -> Result<Rational> {
    rational_at(src, 1, 1)
}

fn rational_at(src: &str, line: usize, col: usize) -> Result<Rational> {
    let m = Parser::new(src, line, col, &[])?.parse_all()?;
    m.as_constant().ok_or_else(|| Error::parse(line, col, "expected a rational constant"))
}

fn parse_u64_at(src: &str, line: usize, col: usize, what: &str) -> Result<u64> {
    src.trim()
        .parse()
        .map_err(|_| Error::parse(line, col, format!("expected {what}, found '{}'", src.trim())))
}

/// Splits `s` (starting at column `col`) on `sep`, giving trimmed pieces with
/// their starting columns.
fn pieces(s: &str, col: usize, sep: char) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<char> = s.chars().collect();
    for i in 0..=chars.len() {
        if i == chars.len() || chars[i] == sep || (sep == ' ' && chars[i].is_whitespace()) {
            let piece: String = chars[start..i].iter().collect();
            let lead = piece.chars().take_while(|c| c.is_whitespace()).count();
            let t = piece.trim();
            if !t.is_empty() {
                out.push((t.to_string(), col + start + lead));
            }
            start = i + 1;
        }
    }
    out
}

/// `key=value` with the column where the value starts.
fn key_value(piece: &str, col: usize, line: usize) -> Result<(String, String, usize)> {
    let eq = piece
        .find('=')
        .ok_or_else(|| Error::parse(line, col, format!("expected key=value, found '{piece}'")))?;
    let key = piece[..eq].trim().to_string();
    let rest = &piece[eq + 1..];
    let lead = rest.chars().take_while(|c| c.is_whitespace()).count();
    let vcol = col + piece[..=eq].chars().count() + lead;
    Ok((key, rest.trim().to_string(), vcol))
}

/// Parses an instance file; entries, S and targets may come in any order.
pub fn parse_instance(text: &str) -> Result<ConjectureInstance> {
    let mut entries = Vec::new();
    let mut s = Vec::new();
    let mut targets = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let colon = content
            .find(':')
            .ok_or_else(|| Error::parse(line, 1, "expected 'entry:', 'S:' or 'target:'"))?;
        let key = content[..colon].trim();
        let body = &content[colon + 1..];
        let body_col = content[..=colon].chars().count() + 1;
        match key {
            "entry" => entries.push(parse_entry(body, line, body_col)?),
            "S" => {
                for (p, col) in pieces(body, body_col, ',') {
                    if p == "real" {
                        s.push(PlaceOfQ::Real);
                    } else {
                        let p = parse_u64_at(&p, line, col, "a prime or 'real'")?;
                        s.push(PlaceOfQ::finite(p).map_err(|e| Error::parse(line, col, e.to_string()))?);
                    }
                }
            }
            "target" => targets.push(parse_target(body, line, body_col)?),
            other => {
                let col = raw.find(other).map_or(1, |i| raw[..i].chars().count() + 1);
                return Err(Error::parse(line, col, format!("unknown line kind '{other}'")));
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::parse(1, 1, "instance has no 'entry:' line"));
    }
    ConjectureInstance::new(entries, s, targets)
}

fn parse_entry(body: &str, line: usize, col: usize) -> Result<Entry> {
    let (mut p, mut g, mut b) = (None, None, None);
    for (piece, pcol) in pieces(body, col, ';') {
        let (k, v, vcol) = key_value(&piece, pcol, line)?;
        match k.as_str() {
            "P" => p = Some(parse_at(&v, "t", line, vcol)?),
            "g" => g = Some(parse_relative_at(&v, "x", "a", line, vcol)?),
            "b" => b = Some(parse_at(&v, "a", line, vcol)?),
            _ => return Err(Error::parse(line, pcol, format!("unknown entry field '{k}'"))),
        }
    }
    let missing = |what: &str| Error::parse(line, col, format!("entry is missing {what}="));
    Entry::new(p.ok_or_else(|| missing("P"))?, g.ok_or_else(|| missing("g"))?, b.unwrap_or_else(PolyQ::one))
}

fn parse_target(body: &str, line: usize, col: usize) -> Result<LocalTarget> {
    let (mut place, mut t, mut n, mut eps) = (None, None, None, None);
    for (piece, pcol) in pieces(body, col, ' ') {
        if piece == "real" {
            place = Some((PlaceOfQ::Real, pcol));
            continue;
        }
        let (k, v, vcol) = key_value(&piece, pcol, line)?;
        match k.as_str() {
            "v" if v == "real" => place = Some((PlaceOfQ::Real, vcol)),
            "v" => {
                let p = parse_u64_at(&v, line, vcol, "a prime")?;
                place = Some((PlaceOfQ::finite(p).map_err(|e| Error::parse(line, vcol, e.to_string()))?, vcol));
            }
            "t" => t = Some(rational_at(&v, line, vcol)?),
            "N" => n = Some((parse_u64_at(&v, line, vcol, "a positive integer")?, vcol)),
            "eps" => eps = Some((rational_at(&v, line, vcol)?, vcol)),
            _ => return Err(Error::parse(line, pcol, format!("unknown target field '{k}'"))),
        }
    }
    let (place, pcol) = place.ok_or_else(|| Error::parse(line, col, "target needs v=<prime> or real"))?;
    let t = t.ok_or_else(|| Error::parse(line, col, "target needs t="))?;
    let wrap = |c: usize| move |e: Error| Error::parse(line, c, e.to_string());
    match place {
        PlaceOfQ::Real => {
            let (eps, ecol) = eps.ok_or_else(|| Error::parse(line, pcol, "real target needs eps="))?;
            LocalTarget::real(t, eps).map_err(wrap(ecol))
        }
        PlaceOfQ::Finite(p) => {
            let (n, ncol) = n.ok_or_else(|| Error::parse(line, pcol, "finite target needs N="))?;
            LocalTarget::finite(p, t, n as i64).map_err(wrap(ncol))
        }
    }
}

/// One target in the `target:` line syntax, e.g. `v=2 t=5/4 N=3` or `real t=1 eps=1/10`.
pub fn parse_local_target(src: &str) -> Result<LocalTarget> {
    parse_target(src, 1, 1)
}

/// An affine-linear form `c₀ + c₁x1 + … + cₙxn`, returned as `[c₀, …, cₙ]`.
pub fn parse_affine_form(src: &str, dimension: usize) -> Result<Vec<Rational>> {
    let names: Vec<String> = (1..=dimension).map(|i| format!("x{i}")).collect();
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let m = Parser::new(src, 1, 1, &vars)?.parse_all()?;
    let mut out = vec![Rational::zero(); dimension + 1];
    for (e, c) in m.0 {
        match e.iter().sum::<u32>() {
            0 => out[0] = c,
            1 => out[1 + e.iter().position(|&d| d == 1).unwrap()] = c,
            _ => return Err(Error::parse(1, 1, format!("'{src}' is not affine-linear"))),
        }
    }
    Ok(out)
}

/// Writes an instance back in the line format; `parse_instance` reads it back
/// to the same entries, S and targets.
pub fn write_instance(inst: &ConjectureInstance) -> String {
    let mut out = String::new();
    for e in inst.entries() {
        out.push_str(&format!(
            "entry: P={}; g={}; b={}\n",
            e.p().display_var("t"),
            e.ext.g().display("x", "a"),
            e.b.display_var("a")
        ));
    }
    let s: Vec<String> = inst.s().iter().map(|v| v.to_string()).collect();
    out.push_str(&format!("S: {}\n", s.join(", ")));
    for t in inst.targets().values() {
        out.push_str(&format!("target: {}\n", t.describe()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat, rat_int};
    use proptest::prelude::*;

    #[test]
    fn polynomial_expressions() {
        assert_eq!(parse_poly("t^2 - 1/2", "t").unwrap(), PolyQ::new(vec![rat(-1, 2), rat(0, 1), rat(1, 1)]));
        assert_eq!(parse_poly("(t+1)(t-1)", "t").unwrap(), PolyQ::from_ints(&[-1, 0, 1]));
        assert_eq!(parse_poly("2t^3 - -t", "t").unwrap(), PolyQ::from_ints(&[0, 1, 0, 2]));
        assert_eq!(parse_poly("(1/2)*a + 3", "a").unwrap(), PolyQ::new(vec![rat_int(3), rat(1, 2)]));
        assert_eq!(parse_poly("(t^2)^3/4", "t").unwrap(), PolyQ::monomial(rat(1, 4), 6));
        let g = parse_relative("x^2 - (a+1)*x + 3a", "x", "a").unwrap();
        assert_eq!(g, vec![PolyQ::from_ints(&[0, 3]), PolyQ::from_ints(&[-1, -1]), PolyQ::one()]);
        assert_eq!(parse_rational("-5/4").unwrap(), rat(-5, 4));
        assert_eq!(parse_affine_form("x2 - 3 + x1/2", 2).unwrap(), vec![rat_int(-3), rat(1, 2), rat_int(1)]);
        assert!(parse_affine_form("x1*x2", 2).is_err());
        assert_eq!(parse_local_target("real t=3 eps=1/2").unwrap().eps(), Some(&rat(1, 2)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_poly("t^2 + y", "t") {
            Err(Error::Parse { line: 1, column: 7, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_poly("t / t", "t") {
            Err(Error::Parse { column: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_poly("(t + 1", "t"), Err(Error::Parse { column: 7, .. })));
        assert!(matches!(parse_poly("t $ 1", "t"), Err(Error::Parse { column: 3, .. })));
        let text = "entry: P=t; g=x^2+1; b=1\ntarget: v=2 t=5/4 M=3\n";
        match parse_instance(text) {
            Err(Error::Parse { line: 2, column: 19, .. }) => {}
            other => panic!("{other:?}"),
        }
        let text = "entry: P=t; g=x^2+1; b=1\ntarget: v=4 t=1 N=3\n";
        assert!(matches!(parse_instance(text), Err(Error::Parse { line: 2, column: 11, .. })));
        assert!(matches!(parse_instance("bogus: 1"), Err(Error::Parse { line: 1, column: 1, .. })));
    }

    #[test]
    fn instance_file() {
        let text = "# Gaussian\nentry: P=t; g=x^2+1; b=1\nS: real, 2, 3\ntarget: v=2 t=5/4 N=3\ntarget: real t=10 eps=1/10\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.entries().len(), 1);
        assert!(inst.in_s(3));
        let t2 = inst.target(PlaceOfQ::Finite(2)).unwrap();
        assert_eq!(t2.t, rat(5, 4));
        assert_eq!(t2.adic_precision(), Some(3));
        assert_eq!(inst.target(PlaceOfQ::Real).unwrap().eps(), Some(&rat(1, 10)));
    }

    #[test]
    fn conflicting_targets_are_infeasible() {
        let text = "entry: P=t; g=x^2+1\ntarget: v=2 t=1 N=3\ntarget: v=2 t=2 N=3\n";
        assert!(matches!(parse_instance(text), Err(Error::InfeasibleAtPrecision(_))));
    }

    fn arb_poly() -> impl Strategy<Value = PolyQ> {
        prop::collection::vec((-20i64..20, 1i64..6), 1..5)
            .prop_map(|c| PolyQ::new(c.into_iter().map(|(n, d)| rat(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn display_round_trips(p in arb_poly()) {
            prop_assert_eq!(parse_poly(&p.display_var("t"), "t").unwrap(), p);
        }

        #[test]
        fn instance_round_trips(n in 1i64..8, d in 1i64..5, prec in 1i64..5) {
            let text = format!(
                "entry: P=t^2 - 2; g=x^2 - a*x + {n} + 1/{d}; b=a + {n}\ntarget: v=7 t={n}/{d} N={prec}\ntarget: real t=-{n} eps=1/{d}\n"
            );
            let inst = parse_instance(&text).unwrap();
            let again = parse_instance(&write_instance(&inst)).unwrap();
            prop_assert_eq!(again.s(), inst.s());
            prop_assert_eq!(again.targets(), inst.targets());
            prop_assert_eq!(write_instance(&again), write_instance(&inst));
        }
    }
}
