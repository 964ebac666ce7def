//! Canonical text grammar for polynomials.
//!
//! Rendering lists terms by descending graded-lex order, e.g.
//! `3/2*x^2*y - z^4 + 1`. The parser accepts that form plus parentheses and
//! integer powers of sub-expressions.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{cmp_grlex, Poly, Rat};
use crate::error::{Error, Result};

pub(super) fn render(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut terms: Vec<_> = p.terms().collect();
    terms.sort_by(|a, b| cmp_grlex(b.0, a.0));
    let mut out = String::new();
    for (i, (e, c)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let a = c.abs();
        let mono: Vec<String> = e
            .iter()
            .zip(p.vars())
            .filter(|(k, _)| **k > 0)
            .map(|(k, v)| if *k == 1 { v.clone() } else { format!("{v}^{k}") })
            .collect();
        if mono.is_empty() {
            out.push_str(&a.to_string());
        } else {
            if !a.is_one() {
                out.push_str(&a.to_string());
                out.push('*');
            }
            out.push_str(&mono.join("*"));
        }
    }
    out
}

impl Poly {
    /// Parses a polynomial over the given variables.
    pub fn parse<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<Poly> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
        };
        let r = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(r)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Vec<String>,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let col = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        Error::Syntax {
            line,
            column: col,
            message: msg.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        let mut acc = self.term()?;
        if neg {
            acc = -acc;
        }
        loop {
            if self.eat(b'+') {
                acc = acc + self.term()?;
            } else if self.eat(b'-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.factor()?;
            } else if self.peek() == Some(b'/') {
                self.pos += 1;
                let at = self.pos;
                let d = self.factor()?;
                match d.constant_value() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&(Rat::one() / c)),
                    _ => {
                        self.pos = at;
                        return Err(self.error("division by a non-constant or zero"));
                    }
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a non-negative integer exponent"));
            }
            let n: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: BigInt = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .parse()
                    .unwrap();
                Ok(Poly::constant(&self.vars, Rat::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_'
                        || self.src[self.pos] == b'\'')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match Poly::var(&self.vars, name) {
                    Ok(v) => Ok(v),
                    Err(_) => {
                        self.pos = start;
                        Err(self.error(&format!("unknown variable `{name}`")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_roundtrip() {
        let v = ["x", "y", "z"];
        for s in [
            "x^2 + y^2 - z^4",
            "x^2*z - 5*z^4 + 1",
            "-3/2*x*y*z + 7",
            "0",
            "-1",
            "y^2 + x*z - x^3*z^5",
        ] {
            let p = Poly::parse(s, &v).unwrap();
            assert_eq!(Poly::parse(&p.to_string(), &v).unwrap(), p, "{s}");
        }
    }

    #[test]
    fn canonical_ordering() {
        let p = Poly::parse("1 - z^4 + y^2 + x^2", &["x", "y", "z"]).unwrap();
        assert_eq!(p.to_string(), "-z^4 + x^2 + y^2 + 1");
    }

    #[test]
    fn parentheses_and_powers() {
        let v = ["x", "y"];
        let p = Poly::parse("(x + y)^2 - 2*x*y", &v).unwrap();
        assert_eq!(p, Poly::parse("x^2 + y^2", &v).unwrap());
    }

    #[test]
    fn errors_carry_columns() {
        match Poly::parse("x^", &["x"]) {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 3),
            other => panic!("{other:?}"),
        }
        assert!(Poly::parse("w + 1", &["x"]).is_err());
    }
}
