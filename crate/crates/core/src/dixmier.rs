//! The two-projection symbol calculus.
//!
//! Words in the generators `P`, `Q`, `I` evaluate two ways: literally as
//! matrices against a concrete pair, and as 2x2 matrix functions on the
//! generic spectrum through the correspondence
//!
//! ```text
//! P -> [[1, 0], [0, 0]]      Q -> [[x, r], [r, 1-x]],  r = sqrt(x(1-x))
//! ```
//!
//! For pairs in generic position (all four aligned blocks trivial) the symbol
//! map is a *-isomorphism onto its image, so operator norms agree with
//! sup-norms over the spectrum; `verify_isomorphism` measures exactly that.

use num_complex::Complex64;
use serde::Serialize;

use crate::cmatrix::CMatrix;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::halmos::{decompose, ProjectionPair};
use crate::spectral::operator_norm;

/// Total-degree cap; beyond this, norm comparisons would need compensated
/// arithmetic that the library does not promise.
pub const MAX_WORD_DEGREE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gen {
    P,
    Q,
}

/// One product term: a coefficient times a sequence of generators. The empty
/// sequence is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub factors: Vec<Gen>,
}

/// A formal sum of products over `{P, Q, I}` with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolWord {
    terms: Vec<Term>,
}

impl SymbolWord {
    pub fn identity() -> Self {
        SymbolWord {
            terms: vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: Vec::new(),
            }],
        }
    }

    pub fn zero() -> Self {
        SymbolWord { terms: Vec::new() }
    }

    pub fn generator(g: Gen) -> Self {
        SymbolWord {
            terms: vec![Term {
                coeff: Complex64::new(1.0, 0.0),
                factors: vec![g],
            }],
        }
    }

    pub fn constant(c: Complex64) -> Self {
        SymbolWord {
            terms: vec![Term {
                coeff: c,
                factors: Vec::new(),
            }],
        }
    }

    /// Builds a word from raw terms, combining duplicates.
    pub fn from_terms(terms: Vec<Term>) -> Self {
        SymbolWord { terms }.collect_terms()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.factors.len()).max().unwrap_or(0)
    }

    /// Syntactic adjoint: reverse each product, conjugate coefficients.
    pub fn adjoint(&self) -> SymbolWord {
        SymbolWord {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    factors: t.factors.iter().rev().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &SymbolWord) -> SymbolWord {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SymbolWord { terms }.collect_terms()
    }

    pub fn sub(&self, other: &SymbolWord) -> SymbolWord {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> SymbolWord {
        SymbolWord {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * c,
                    factors: t.factors.clone(),
                })
                .collect(),
        }
    }

    pub fn mul(&self, other: &SymbolWord) -> Result<SymbolWord> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let degree = a.factors.len() + b.factors.len();
                if degree > MAX_WORD_DEGREE {
                    return Err(Error::DegreeOverflow {
                        degree,
                        cap: MAX_WORD_DEGREE,
                    });
                }
                let mut factors = a.factors.clone();
                factors.extend(&b.factors);
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    factors,
                });
            }
        }
        Ok(SymbolWord { terms }.collect_terms())
    }

    pub fn pow(&self, k: u32) -> Result<SymbolWord> {
        let mut out = SymbolWord::identity();
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Combines terms with identical factor sequences, dropping exact zeros.
    /// First-occurrence order is preserved so results are deterministic.
    fn collect_terms(self) -> SymbolWord {
        let mut out: Vec<Term> = Vec::new();
        for t in self.terms {
            match out.iter_mut().find(|u| u.factors == t.factors) {
                Some(u) => u.coeff += t.coeff,
                None => out.push(t),
            }
        }
        out.retain(|t| t.coeff.re != 0.0 || t.coeff.im != 0.0);
        SymbolWord { terms: out }
    }

    /// The commutator `[P, Q]` as a word.
    pub fn commutator_pq() -> SymbolWord {
        let p = SymbolWord::generator(Gen::P);
        let q = SymbolWord::generator(Gen::Q);
        p.mul(&q).unwrap().sub(&q.mul(&p).unwrap())
    }

    /// Literal matrix evaluation against concrete `P`, `Q` of equal dimension.
    pub fn evaluate_matrix(&self, p: &CMatrix, q: &CMatrix) -> CMatrix {
        assert_eq!(p.rows(), q.rows(), "generator dimension mismatch");
        let dim = p.rows();
        let mut acc = CMatrix::zeros(dim, dim);
        for term in &self.terms {
            let mut prod = CMatrix::identity(dim);
            for g in &term.factors {
                prod = match g {
                    Gen::P => &prod * p,
                    Gen::Q => &prod * q,
                };
            }
            acc = &acc + &prod.scale(term.coeff);
        }
        acc
    }

    /// Symbol value at one sample `x` in `[0, 1]`.
    pub fn evaluate_symbol_at(&self, x: f64) -> Mat2 {
        let p = Mat2::gen_p();
        let q = Mat2::gen_q(x);
        let mut acc = Mat2::zero();
        for term in &self.terms {
            let mut prod = Mat2::identity();
            for g in &term.factors {
                prod = prod.mul(match g {
                    Gen::P => &p,
                    Gen::Q => &q,
                });
            }
            acc = acc.add(&prod.scale(term.coeff));
        }
        acc
    }

    /// Symbol function on a sample set.
    pub fn evaluate_symbol(&self, samples: &[f64]) -> SymbolFunction {
        SymbolFunction {
            samples: samples.to_vec(),
            values: samples.iter().map(|&x| self.evaluate_symbol_at(x)).collect(),
        }
    }

    /// Parses the word grammar: generators `P Q I`, `+ - *`, `^k`, complex
    /// literals (`0.25`, `2i`, `1e-3`), and parentheses. Errors carry the
    /// byte position.
    pub fn parse(src: &str) -> Result<SymbolWord> {
        Parser::new(src).parse_word()
    }
}

/// 2x2 complex matrix, the symbol-side value type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn zero() -> Mat2 {
        Mat2([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Mat2 {
        let mut m = Mat2::zero();
        m.0[0][0] = Complex64::new(1.0, 0.0);
        m.0[1][1] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn gen_p() -> Mat2 {
        let mut m = Mat2::zero();
        m.0[0][0] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn gen_q(x: f64) -> Mat2 {
        let r = (x * (1.0 - x)).max(0.0).sqrt();
        Mat2([
            [Complex64::new(x, 0.0), Complex64::new(r, 0.0)],
            [Complex64::new(r, 0.0), Complex64::new(1.0 - x, 0.0)],
        ])
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += other.0[i][j];
            }
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] *= c;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2([
            [self.0[0][0].conj(), self.0[1][0].conj()],
            [self.0[0][1].conj(), self.0[1][1].conj()],
        ])
    }

    pub fn max_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// Operator norm, closed form from the 2x2 Gram invariants.
    pub fn op_norm(&self) -> f64 {
        let t: f64 = self
            .0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum();
        let det = self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0];
        let d = det.norm_sqr();
        let disc = (t * t - 4.0 * d).max(0.0).sqrt();
        ((t + disc) / 2.0).sqrt()
    }
}

/// A sampled 2x2 symbol function on a finite subset of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SymbolFunction {
    pub samples: Vec<f64>,
    pub values: Vec<Mat2>,
}

impl SymbolFunction {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(Mat2::op_norm).fold(0.0, f64::max)
    }

    /// Largest off-diagonal modulus over samples at 0 or 1; the membership
    /// condition of the symbol algebra demands this vanish.
    pub fn endpoint_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for (x, v) in self.samples.iter().zip(&self.values) {
            if *x == 0.0 || *x == 1.0 {
                worst = worst.max(v.0[0][1].norm()).max(v.0[1][0].norm());
            }
        }
        worst
    }
}

/// True iff all four aligned blocks of the pair vanish.
pub fn check_generic_position(pair: &ProjectionPair, tol_cluster: f64) -> Result<bool> {
    let form = decompose(pair, tol_cluster)?;
    Ok(form.d == [0, 0, 0, 0])
}

#[derive(Debug, Clone, Serialize)]
pub struct IsomorphismReport {
    pub matrix_norm: f64,
    pub symbol_sup_norm: f64,
    pub rel_error: f64,
    /// The samples used (the generic spectrum of the pair).
    pub samples: Vec<f64>,
}

/// Compares the operator norm of a word against the sup-norm of its symbol
/// over the generic spectrum. For pairs in generic position the two agree —
/// that is the numerical isometry check.
pub fn verify_isomorphism(word: &SymbolWord, pair: &ProjectionPair) -> Result<IsomorphismReport> {
    let form = decompose(pair, Tolerances::DEFAULT.cluster)?;
    if form.d != [0, 0, 0, 0] {
        return Err(Error::NotGenericPosition { d: form.d });
    }
    let matrix_norm = operator_norm(&word.evaluate_matrix(pair.p(), pair.q()))?;
    let symbol = word.evaluate_symbol(&form.s);
    let symbol_sup_norm = symbol.sup_norm();
    let denom = matrix_norm.max(symbol_sup_norm);
    let rel_error = if denom <= 1e-300 {
        0.0
    } else {
        (matrix_norm - symbol_sup_norm).abs() / denom
    };
    Ok(IsomorphismReport {
        matrix_norm,
        symbol_sup_norm,
        rel_error,
        samples: form.s,
    })
}

// --- parser ---------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
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

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn parse_word(&mut self) -> Result<SymbolWord> {
        let word = self.parse_expr()?;
        if let Some(c) = self.peek() {
            return Err(self.err(format!("unexpected character `{}`", c as char)));
        }
        Ok(word)
    }

    fn parse_expr(&mut self) -> Result<SymbolWord> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.bump();
                self.parse_term()?.scale(Complex64::new(-1.0, 0.0))
            }
            Some(b'+') => {
                self.bump();
                self.parse_term()?
            }
            _ => self.parse_term()?,
        };
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.bump();
                    acc = acc.add(&self.parse_term()?);
                }
                b'-' => {
                    self.bump();
                    acc = acc.sub(&self.parse_term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<SymbolWord> {
        let mut acc = self.parse_factor()?;
        while let Some(b'*') = self.peek() {
            self.bump();
            acc = acc.mul(&self.parse_factor()?)?;
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<SymbolWord> {
        let base = self.parse_atom()?;
        if let Some(b'^') = self.peek() {
            self.bump();
            let k = self.parse_uint()?;
            return base.pow(k);
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<SymbolWord> {
        match self.peek() {
            Some(b'P') => {
                self.bump();
                Ok(SymbolWord::generator(Gen::P))
            }
            Some(b'Q') => {
                self.bump();
                Ok(SymbolWord::generator(Gen::Q))
            }
            Some(b'I') => {
                self.bump();
                Ok(SymbolWord::identity())
            }
            Some(b'i') => {
                self.bump();
                Ok(SymbolWord::constant(Complex64::new(0.0, 1.0)))
            }
            Some(b'(') => {
                self.bump();
                let inner = self.parse_expr()?;
                match self.bump() {
                    Some(b')') => Ok(inner),
                    _ => Err(self.err("expected `)`")),
                }
            }
            Some(b'-') => {
                self.bump();
                Ok(self.parse_atom()?.scale(Complex64::new(-1.0, 0.0)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn parse_uint(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err("exponent out of range"))
    }

    fn parse_number(&mut self) -> Result<SymbolWord> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // Optional exponent part.
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
        {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(format!("bad number literal `{text}`")))?;
        // Trailing `i` makes the literal imaginary.
        if self.pos < self.src.len() && self.src[self.pos] == b'i' {
            self.pos += 1;
            return Ok(SymbolWord::constant(Complex64::new(0.0, value)));
        }
        Ok(SymbolWord::constant(Complex64::new(value, 0.0)))
    }
}
