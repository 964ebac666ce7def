//! Closed-form functions of `(p, q)`.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | power
//! power  := atom ("^" "-"? digits)?
//! atom   := number | "pi" | "p" | "q" | "theta"
//!         | ("cos" | "sin" | "exp" | "flat") "(" expr ")" | "(" expr ")"
//! ```
//!
//! `theta` stands for `2*pi*p/q` and `flat(e)` for `exp(-1/q^2)*e`, extended
//! by 0 at `q = 0`. Numbers are exact decimals.
//!
//! ```
//! use duval::expr::Expr;
//!
//! let e = Expr::parse("q^2 + flat(cos(theta))").unwrap();
//! assert_eq!(e.to_string(), "q^2 + flat(cos(theta))");
//! assert!((e.eval(0.0, 1.0) - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
//! ```

use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::poly::{rat_to_f64, Rat};
use crate::trig::{Kind, TrigKey, TrigPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Cos,
    Sin,
    Exp,
    Flat,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Cos => "cos",
            Func::Sin => "sin",
            Func::Exp => "exp",
            Func::Flat => "flat",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(Rat),
    Pi,
    P,
    Q,
    Theta,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// `exp(-1/q^2)`, taken as 0 at `q = 0`.
pub fn flat_weight(q: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        (-1.0 / (q * q)).exp()
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser::new(src);
        p.skip_ws();
        let e = p.expr()?;
        p.skip_ws();
        if let Some(c) = p.peek() {
            return Err(p.error(format!("unexpected `{c}`")));
        }
        Ok(e)
    }

    /// Value at `(p, q)`.
    ///
    /// At `q = 0` the expression is evaluated at `(0, 0)` with `theta = 0`,
    /// which is the limit along `p = 0` for continuous invariant inputs.
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        if q == 0.0 {
            self.eval_at(0.0, 0.0, 0.0)
        } else {
            self.eval_at(p, q, 2.0 * PI * p / q)
        }
    }

    fn eval_at(&self, p: f64, q: f64, th: f64) -> f64 {
        match self {
            Expr::Num(r) => rat_to_f64(r),
            Expr::Pi => PI,
            Expr::P => p,
            Expr::Q => q,
            Expr::Theta => th,
            Expr::Add(a, b) => a.eval_at(p, q, th) + b.eval_at(p, q, th),
            Expr::Sub(a, b) => a.eval_at(p, q, th) - b.eval_at(p, q, th),
            Expr::Mul(a, b) => a.eval_at(p, q, th) * b.eval_at(p, q, th),
            Expr::Div(a, b) => a.eval_at(p, q, th) / b.eval_at(p, q, th),
            Expr::Neg(a) => -a.eval_at(p, q, th),
            Expr::Pow(a, n) => a.eval_at(p, q, th).powi(*n),
            Expr::Call(f, a) => match f {
                Func::Cos => a.eval_at(p, q, th).cos(),
                Func::Sin => a.eval_at(p, q, th).sin(),
                Func::Exp => a.eval_at(p, q, th).exp(),
                Func::Flat => {
                    let w = flat_weight(q);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * a.eval_at(p, q, th)
                    }
                }
            },
        }
    }

    /// Whether the expression mentions `flat`.
    pub fn has_flat(&self) -> bool {
        match self {
            Expr::Call(Func::Flat, _) => true,
            Expr::Num(_) | Expr::Pi | Expr::P | Expr::Q | Expr::Theta => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_flat() || b.has_flat()
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.has_flat(),
        }
    }

    /// Exact form when the expression is a Laurent polynomial in `q` and `π`
    /// times `θ`-powers and `cos`/`sin` of integer multiples of `θ`.
    pub fn to_trig_poly(&self) -> Option<TrigPoly> {
        Some(match self {
            Expr::Num(r) => TrigPoly::constant(r.clone()),
            Expr::Pi => TrigPoly::pi_pow(1),
            Expr::P => TrigPoly::p(),
            Expr::Q => TrigPoly::q_pow(1),
            Expr::Theta => TrigPoly::theta(),
            Expr::Add(a, b) => &a.to_trig_poly()? + &b.to_trig_poly()?,
            Expr::Sub(a, b) => &a.to_trig_poly()? - &b.to_trig_poly()?,
            Expr::Mul(a, b) => &a.to_trig_poly()? * &b.to_trig_poly()?,
            Expr::Div(a, b) => &a.to_trig_poly()? * &invert_monomial(&b.to_trig_poly()?)?,
            Expr::Neg(a) => -&a.to_trig_poly()?,
            Expr::Pow(a, n) => {
                let base = a.to_trig_poly()?;
                if *n >= 0 {
                    base.pow(*n as u32)
                } else {
                    invert_monomial(&base)?.pow(n.unsigned_abs())
                }
            }
            Expr::Call(f, a) => {
                let arg = a.to_trig_poly()?;
                let m = theta_multiple(&arg)?;
                let n = u32::try_from(m.unsigned_abs()).ok()?;
                match f {
                    Func::Cos => TrigPoly::q_pow_cos(0, n),
                    Func::Sin if m < 0 => -&TrigPoly::q_pow_sin(0, n),
                    Func::Sin => TrigPoly::q_pow_sin(0, n),
                    Func::Exp | Func::Flat => return None,
                }
            }
        })
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(r) => f.write_str(&decimal(r)),
            Expr::Pi => f.write_str("pi"),
            Expr::P => f.write_str("p"),
            Expr::Q => f.write_str("q"),
            Expr::Theta => f.write_str("theta"),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.fmt_at(f, 3)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

fn invert_monomial(t: &TrigPoly) -> Option<TrigPoly> {
    let mut it = t.terms();
    match (it.next(), it.next()) {
        (Some((k, c)), None) if k.b == 0 && k.n == 0 => Some(TrigPoly::term(
            TrigKey::scalar(-k.e, -k.a),
            Rat::one() / c,
        )),
        _ => None,
    }
}

/// `m` when `t = m·θ` with `m` an integer.
fn theta_multiple(t: &TrigPoly) -> Option<i64> {
    if t.is_zero() {
        return Some(0);
    }
    let mut it = t.terms();
    match (it.next(), it.next()) {
        (Some((k, c)), None)
            if k.b == 1 && k.a == 0 && k.e == 0 && k.n == 0 && k.kind == Kind::Cos && c.is_integer() =>
        {
            c.to_integer().to_i64()
        }
        _ => None,
    }
}

/// Exact decimal text of a rational whose denominator is `2^a 5^b`.
fn decimal(r: &Rat) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut den = r.denom().clone();
    let mut digits = 0u32;
    let ten = BigInt::from(10);
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let mut scale = BigInt::one();
    while !den.is_one() {
        if den.is_multiple_of(&two) {
            den /= &two;
        } else if den.is_multiple_of(&five) {
            den /= &five;
        } else {
            // not produced by the parser
            return format!("({}/{})", r.numer(), r.denom());
        }
        digits += 1;
    }
    for _ in 0..digits {
        scale *= &ten;
    }
    let scaled = (r * Rat::from_integer(scale.clone())).to_integer();
    let neg = scaled.is_negative();
    let s = scaled.abs().to_string();
    let s = format!("{:0>width$}", s, width = digits as usize + 1);
    let (int_part, frac) = s.split_at(s.len() - digits as usize);
    let frac = frac.trim_end_matches('0');
    format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn error(&self, message: String) -> Error {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
        Error::Syntax {
            line,
            column,
            message,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            self.skip_ws();
            let neg = self.eat('-');
            self.skip_ws();
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected an integer exponent".into()));
            }
            let n: i32 = self.src[start..self.pos]
                .parse()
                .map_err(|_| self.error("exponent out of range".into()))?;
            return Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input".into()));
        };
        if c == '(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`".into()));
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            let func = match word {
                "pi" => return Ok(Expr::Pi),
                "p" => return Ok(Expr::P),
                "q" => return Ok(Expr::Q),
                "theta" => return Ok(Expr::Theta),
                "cos" => Func::Cos,
                "sin" => Func::Sin,
                "exp" => Func::Exp,
                "flat" => Func::Flat,
                _ => {
                    self.pos = start;
                    return Err(self.error(format!("unknown name `{word}`")));
                }
            };
            if !self.eat('(') {
                return Err(self.error(format!("expected `(` after `{word}`")));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`".into()));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(self.error(format!("unexpected `{c}`")))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut frac = "";
        if self.peek() == Some('.') {
            self.pos += 1;
            let fs = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            frac = &self.src[fs..self.pos];
        }
        if int_part.is_empty() && frac.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number".into()));
        }
        let digits = format!("{int_part}{frac}");
        let n: BigInt = digits.parse().expect("ascii digits");
        let d = num_traits::pow(BigInt::from(10), frac.len());
        Ok(Expr::Num(Rat::new(n, d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use proptest::prelude::*;

    #[test]
    fn syntax_error_column() {
        match Expr::parse("q^") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 3)),
            other => panic!("{other:?}"),
        }
        match Expr::parse("q +\n  cos(") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn render_minimal_parens() {
        for s in [
            "q^2 + flat(cos(theta))",
            "-q^2",
            "(-q)^2",
        ] {
            if let Ok(e) = Expr::parse(s) {
                assert_eq!(e.to_string(), s);
            }
        }
        assert_eq!(Expr::parse("1 - (2 - 3)").unwrap().to_string(), "1 - (2 - 3)");
        assert_eq!(Expr::parse("(1 - 2) - 3").unwrap().to_string(), "1 - 2 - 3");
        assert_eq!(Expr::parse("q^-2").unwrap().to_string(), "q^-2");
        assert_eq!(Expr::parse("0.25*q").unwrap().to_string(), "0.25*q");
        assert_eq!(Expr::parse("a").is_err(), true);
    }

    #[test]
    fn flat_vanishes_at_zero() {
        let e = Expr::parse("flat(1/q^5)").unwrap();
        assert_eq!(e.eval(0.3, 0.0), 0.0);
        assert_eq!(e.eval(0.3, 1e-3), 0.0);
    }

    #[test]
    fn exact_forms() {
        let e = Expr::parse("q^2*cos(3*theta) - sin(-2*theta)/pi").unwrap();
        let t = e.to_trig_poly().unwrap();
        let want = &TrigPoly::q_pow_cos(2, 3) + &TrigPoly::q_pow_sin(0, 2).shift(-1, 0);
        assert_eq!(t, want);
        assert!(Expr::parse("flat(q)").unwrap().to_trig_poly().is_none());
        assert!(Expr::parse("cos(theta/2)").unwrap().to_trig_poly().is_none());
        assert_eq!(
            Expr::parse("2.5").unwrap().to_trig_poly().unwrap(),
            TrigPoly::constant(rat(5, 2))
        );
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..40, 0u32..3).prop_map(|(n, d)| Expr::Num(Rat::new(n.into(), 10u32.pow(d).into()))),
            Just(Expr::Pi),
            Just(Expr::P),
            Just(Expr::Q),
            Just(Expr::Theta),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), -3i32..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
                (inner, 0usize..4).prop_map(|(a, f)| {
                    let f = [Func::Cos, Func::Sin, Func::Exp, Func::Flat][f];
                    Expr::Call(f, Box::new(a))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_render_roundtrip(e in arb_expr()) {
            let s = e.to_string();
            prop_assert_eq!(Expr::parse(&s).unwrap(), e);
        }
    }
}
