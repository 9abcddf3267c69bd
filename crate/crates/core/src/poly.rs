//! Sparse multivariate polynomials with real coefficients.
//!
//! Every algebraic object in the crate (vector fields, domain polynomials,
//! Lyapunov candidates and SOS multipliers) is a [`Polynomial`]. Terms are
//! kept in graded-lexicographic order so that bases, Gram indices and
//! serialized artifacts are reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with magnitude below this are dropped after arithmetic.
pub const DROP_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("term {0} is not in the supplied basis")]
    TermOutsideBasis(String),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Exponent vector of a monomial `x1^e1 * ... * xn^en`.
///
/// Ordering is graded lexicographic: lower total degree first, and within a
/// degree `x1` precedes `x2` (so the degree-1 block of a basis reads
/// `x1, x2, ..., xn`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    /// The monomial `x_{var+1}` (0-based `var`).
    pub fn var(dim: usize, var: usize) -> Self {
        let mut e = vec![0; dim];
        e[var] = 1;
        Monomial(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dim(), other.dim());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials in `n` variables of total degree at most `d`, in graded-lex
/// order. The length is `C(n + d, d)`.
pub fn monomial_basis(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for deg in 0..=d {
        let mut current = vec![0u32; n];
        push_degree(n, deg, 0, &mut current, &mut out);
    }
    out
}

// Emits exponent vectors of exact degree `remaining` with x1 exponents descending.
fn push_degree(n: usize, remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if n == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(Monomial(current.clone()));
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_degree(n, remaining - e, pos + 1, current, out);
    }
    current[pos] = 0;
}

/// A polynomial in `dim` variables stored as a sparse term map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialRepr", try_from = "PolynomialRepr")]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::from_terms(dim, [(Monomial::one(dim), c)])
    }

    /// The coordinate polynomial `x_{i+1}`.
    pub fn var(dim: usize, i: usize) -> Self {
        Self::from_terms(dim, [(Monomial::var(dim, i), 1.0)])
    }

    /// Builds a polynomial from (monomial, coefficient) pairs, summing
    /// repeated monomials. Panics if a monomial has the wrong length.
    pub fn from_terms<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            assert_eq!(m.dim(), dim, "monomial dimension does not match polynomial");
            *map.entry(m).or_insert(0.0) += c;
        }
        let mut p = Polynomial { dim, terms: map };
        p.canonicalize();
        p
    }

    /// Inverse of [`coefficient_vector`].
    pub fn from_coefficients(dim: usize, basis: &[Monomial], coeffs: &[f64]) -> Self {
        assert_eq!(basis.len(), coeffs.len());
        Self::from_terms(dim, basis.iter().cloned().zip(coeffs.iter().copied()))
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= DROP_TOLERANCE);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one(self.dim))
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.dim != other.dim {
            return Err(PolyError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            *terms.entry(m.clone()).or_insert(0.0) += c;
        }
        let mut p = Polynomial { dim: self.dim, terms };
        p.canonicalize();
        Ok(p)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_dim(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        let mut p = Polynomial { dim: self.dim, terms };
        p.canonicalize();
        Ok(p)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut p = Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        };
        p.canonicalize();
        p
    }

    pub fn powi(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.dim, 1.0);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                left: self.dim,
                right: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Unchecked evaluation; `x` must have length `dim`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms.iter().map(|(m, c)| c * m.eval(x)).sum()
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn partial(&self, i: usize) -> Polynomial {
        let terms = self.terms.iter().filter(|(m, _)| m.0[i] > 0).map(|(m, &c)| {
            let mut e = m.0.clone();
            let k = e[i];
            e[i] -= 1;
            (Monomial(e), c * k as f64)
        });
        Polynomial::from_terms(self.dim, terms)
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    /// Substitutes `x -> s * x`: the coefficient of a degree-k term is
    /// multiplied by `s^k`.
    pub fn scale_variables(&self, s: f64) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|(m, &c)| (m.clone(), c * s.powi(m.degree() as i32)));
        Polynomial::from_terms(self.dim, terms)
    }

    /// Precomputes a flat term table for fast repeated evaluation.
    pub fn evaluator(&self) -> PolyEval {
        PolyEval::new(self)
    }
}

/// `∇V · f`, the derivative of `V` along the vector field `f`.
pub fn lie_derivative(v: &Polynomial, f: &[Polynomial]) -> Result<Polynomial, PolyError> {
    if f.len() != v.dim() {
        return Err(PolyError::DimensionMismatch {
            left: v.dim(),
            right: f.len(),
        });
    }
    let mut out = Polynomial::zero(v.dim());
    for (i, fi) in f.iter().enumerate() {
        out = out.add(&v.partial(i).mul(fi)?)?;
    }
    Ok(out)
}

/// Coefficients of `p` with respect to `basis`. Fails if `p` has a term
/// that is not in the basis.
pub fn coefficient_vector(p: &Polynomial, basis: &[Monomial]) -> Result<Vec<f64>, PolyError> {
    let index: BTreeMap<&Monomial, usize> = basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let mut out = vec![0.0; basis.len()];
    for (m, c) in p.terms() {
        match index.get(m) {
            Some(&i) => out[i] = c,
            None => return Err(PolyError::TermOutsideBasis(m.to_string())),
        }
    }
    Ok(out)
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs).expect("polynomial dimension mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs).expect("polynomial dimension mismatch")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs).expect("polynomial dimension mismatch")
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

fn fmt_coeff(c: f64) -> String {
    let a = c.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{:e}", c)
    } else {
        format!("{}", c)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", sign)?;
            }
            if m.is_constant() {
                write!(f, "{}", fmt_coeff(mag))?;
            } else if mag == 1.0 {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", fmt_coeff(mag), m)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr {
            dim: p.dim,
            terms: p.terms.into_iter().map(|(m, c)| (m.0, c)).collect(),
        }
    }
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = PolyError;
    fn try_from(r: PolynomialRepr) -> Result<Self, PolyError> {
        for (e, _) in &r.terms {
            if e.len() != r.dim {
                return Err(PolyError::DimensionMismatch {
                    left: r.dim,
                    right: e.len(),
                });
            }
        }
        Ok(Polynomial::from_terms(
            r.dim,
            r.terms.into_iter().map(|(e, c)| (Monomial(e), c)),
        ))
    }
}

/// Flattened polynomial for hot evaluation loops.
#[derive(Debug, Clone)]
pub struct PolyEval {
    dim: usize,
    max_exp: Vec<usize>,
    exps: Vec<u32>,
    coeffs: Vec<f64>,
}

impl PolyEval {
    fn new(p: &Polynomial) -> Self {
        let mut max_exp = vec![0usize; p.dim];
        let mut exps = Vec::with_capacity(p.num_terms() * p.dim);
        let mut coeffs = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            for (i, &e) in m.exponents().iter().enumerate() {
                max_exp[i] = max_exp[i].max(e as usize);
            }
            exps.extend_from_slice(m.exponents());
            coeffs.push(c);
        }
        PolyEval {
            dim: p.dim,
            max_exp,
            exps,
            coeffs,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        // powers[i] holds x_i^0 .. x_i^max
        let mut powers: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        for (i, &xi) in x.iter().enumerate() {
            let mut row = Vec::with_capacity(self.max_exp[i] + 1);
            let mut v = 1.0;
            row.push(v);
            for _ in 0..self.max_exp[i] {
                v *= xi;
                row.push(v);
            }
            powers.push(row);
        }
        let mut sum = 0.0;
        for (t, c) in self.coeffs.iter().enumerate() {
            let e = &self.exps[t * self.dim..(t + 1) * self.dim];
            let mut term = *c;
            for (i, &k) in e.iter().enumerate() {
                term *= powers[i][k as usize];
            }
            sum += term;
        }
        sum
    }
}

/// Parses expressions like `2.5*x1^2*x3 - x2` or `-(0.2 - x1^2)*(1 - x2^2)`
/// with variables `x1..xn`.
pub fn parse_polynomial(src: &str, dim: usize) -> Result<Polynomial, PolyError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        dim,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                b'-' => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a non-negative integer exponent"));
            }
            let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(base.powi(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let idx: usize = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .parse()
                    .map_err(|_| self.err("expected variable index after 'x'"))?;
                if idx == 0 || idx > self.dim {
                    return Err(self.err(&format!("variable x{} outside x1..x{}", idx, self.dim)));
                }
                Ok(Polynomial::var(self.dim, idx - 1))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Polynomial, PolyError> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| PolyError::Parse {
            pos: start,
            msg: format!("bad number '{}'", text),
        })?;
        Ok(Polynomial::constant(self.dim, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Polynomial {
        parse_polynomial(s, n).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(&p("x1^2 + 1", 1) + &p("-1", 1), p("x1^2", 1));
        let q = p("3*x1*x2 - x2^3", 2);
        assert_eq!(&q + &Polynomial::zero(2), q);
        assert_eq!(&p("x1 + x2", 2) + &p("x1 - x2", 2), p("2*x1", 2));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&p("x1 + 1", 1) * &p("x1 - 1", 1), p("x1^2 - 1", 1));
        let q = p("x1*x2 + 4", 2);
        assert_eq!(&q * &Polynomial::constant(2, 1.0), q);
        assert_eq!(p("(x1 + x2)^2", 2), p("x1^2 + 2*x1*x2 + x2^2", 2));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = p("x1", 1);
        let b = p("x2", 2);
        assert!(matches!(a.add(&b), Err(PolyError::DimensionMismatch { .. })));
        assert!(a.mul(&b).is_err());
        assert!(b.evaluate(&[1.0]).is_err());
        assert!(lie_derivative(&a, &[b.clone(), b]).is_err());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p("x1^2 + 2*x1*x2", 2).evaluate(&[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(p("7 - 3*x1*x2^4", 2).evaluate(&[0.0, 0.0]).unwrap(), 7.0);
        assert_eq!(p("x1^4", 1).evaluate(&[-2.0]).unwrap(), 16.0);
        let q = p("x1^3*x2 - 0.5*x2 + 2", 2);
        assert_eq!(q.evaluator().eval(&[1.5, -2.0]), q.eval(&[1.5, -2.0]));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(p("x1^2 + x2^2", 2).gradient(), vec![p("2*x1", 2), p("2*x2", 2)]);
        assert!(p("5", 2).gradient().iter().all(Polynomial::is_zero));
        assert_eq!(p("x1*x2", 2).gradient(), vec![p("x2", 2), p("x1", 2)]);
    }

    #[test]
    fn lie_derivative_examples() {
        let ld = lie_derivative(&p("x1^2", 1), &[p("-x1", 1)]).unwrap();
        assert_eq!(ld, p("-2*x1^2", 1));
        let ld = lie_derivative(&p("3", 2), &[p("x1*x2", 2), p("x1", 2)]).unwrap();
        assert!(ld.is_zero());
        let ld = lie_derivative(&p("x1^2 + x2^2", 2), &[p("x2", 2), p("-x1", 2)]).unwrap();
        assert!(ld.is_zero());
    }

    #[test]
    fn basis_examples() {
        let b = monomial_basis(2, 1);
        assert_eq!(b, vec![Monomial::one(2), Monomial::var(2, 0), Monomial::var(2, 1)]);
        assert_eq!(monomial_basis(3, 8).len(), 165);
        assert_eq!(monomial_basis(1, 0), vec![Monomial::one(1)]);
        let b2 = monomial_basis(2, 2);
        let names: Vec<String> = b2.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]);
        let mut sorted = b2.clone();
        sorted.sort();
        assert_eq!(sorted, b2);
    }

    #[test]
    fn coefficient_vector_examples() {
        let b = monomial_basis(2, 1);
        assert_eq!(coefficient_vector(&p("2*x1", 2), &b).unwrap(), vec![0.0, 2.0, 0.0]);
        assert_eq!(coefficient_vector(&Polynomial::zero(2), &b).unwrap(), vec![0.0; 3]);
        let q = p("1.25 - x2", 2);
        let c = coefficient_vector(&q, &b).unwrap();
        assert_eq!(Polynomial::from_coefficients(2, &b, &c), q);
        assert!(matches!(
            coefficient_vector(&p("x1^2", 2), &b),
            Err(PolyError::TermOutsideBasis(_))
        ));
    }

    #[test]
    fn display_parses_back() {
        let q = p("-2.5*x1^2*x3 - x2 + 1e-7*x3^5 + 0.1", 3);
        assert_eq!(parse_polynomial(&q.to_string(), 3).unwrap(), q);
        assert_eq!(p("2.5*x1^2*x3 - x2", 3).to_string(), "-x2 + 2.5*x1^2*x3");
    }

    #[test]
    fn parse_errors() {
        assert!(parse_polynomial("x3", 2).is_err());
        assert!(parse_polynomial("x1 +", 2).is_err());
        assert!(parse_polynomial("(x1", 2).is_err());
        assert!(parse_polynomial("x1^", 2).is_err());
        assert!(parse_polynomial("y1", 2).is_err());
    }

    #[test]
    fn cancellation_drops_terms() {
        let q = &p("x1 + 1e-3", 1) - &p("x1", 1);
        assert_eq!(q.num_terms(), 1);
        let z = &p("x1", 1) - &p("x1", 1);
        assert!(z.is_zero());
    }

    #[test]
    fn serde_round_trip() {
        let q = p("x1^2*x2 - 0.3 + 4*x2", 2);
        let s = serde_json::to_string(&q).unwrap();
        let back: Polynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
