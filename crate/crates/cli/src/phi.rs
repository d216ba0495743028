//! Expression parser for circle symbols.
//!
//! Grammar over `z`, complex literals (`0.5`, `2i`, `1e-3`), `+ - * /`,
//! integer powers `^k`, parentheses, and implicit multiplication by
//! juxtaposition (`(z-0.5)(z-2)`).

use num_complex::Complex64;
use twoproj::Error;

#[derive(Debug, Clone)]
enum Expr {
    Z,
    Const(Complex64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Expr::Z => z,
            Expr::Const(c) => *c,
            Expr::Neg(e) => -e.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(e, k) => {
                let base = e.eval(z);
                (0..*k).fold(Complex64::new(1.0, 0.0), |acc, _| acc * base)
            }
        }
    }
}

/// Samples the expression at `grid` equispaced points of the unit circle.
pub fn sample_expression(src: &str, grid: usize) -> Result<Vec<Complex64>, Error> {
    let expr = parse(src)?;
    Ok((0..grid)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / grid as f64;
            expr.eval(Complex64::from_polar(1.0, theta))
        })
        .collect())
}

fn parse(src: &str) -> Result<Expr, Error> {
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.err("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
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

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Expr::Neg(Box::new(self.term()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                b'-' => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                // Juxtaposition: `(z-0.5)(z-2)` or `2z`.
                Some(c) if c == b'(' || c == b'z' || c == b'i' || c.is_ascii_digit() || c == b'.' => {
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        let base = self.atom()?;
        if let Some(b'^') = self.peek() {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected an integer exponent"));
            }
            let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("exponent out of range"))?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            Some(b'z') => {
                self.pos += 1;
                Ok(Expr::Z)
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Expr::Const(Complex64::new(0.0, 1.0)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(b')') => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    _ => Err(self.err("expected `)`")),
                }
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.atom()?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < self.src.len()
                    && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E')
                {
                    let mark = self.pos;
                    self.pos += 1;
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
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
                if self.pos < self.src.len() && self.src[self.pos] == b'i' {
                    self.pos += 1;
                    Ok(Expr::Const(Complex64::new(0.0, value)))
                } else {
                    Ok(Expr::Const(Complex64::new(value, 0.0)))
                }
            }
            Some(c) => Err(self.err(format!("unexpected character `{}`", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_and_products() {
        let samples = sample_expression("z^3", 8).unwrap();
        let z1 = Complex64::from_polar(1.0, std::f64::consts::TAU / 8.0);
        assert!((samples[1] - z1 * z1 * z1).norm() < 1e-14);

        let a = sample_expression("(z-0.5)(z-2)", 16).unwrap();
        let b = sample_expression("(z-0.5)*(z-2)", 16).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn complex_literals_and_division() {
        let samples = sample_expression("2i/z + 1", 4).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let want = Complex64::new(0.0, 2.0) / z + 1.0;
        assert!((samples[1] - want).norm() < 1e-14);
    }

    #[test]
    fn parse_errors_have_positions() {
        match sample_expression("z + @", 8).unwrap_err() {
            Error::Parse { position, .. } => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
    }
}
