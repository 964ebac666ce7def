//! Exact multivariate polynomials and rational functions over ℚ.
//!
//! A [`Poly`] is a sparse map from exponent vectors to rational
//! coefficients together with the ordered list of variable names it is
//! written in. Arithmetic between polynomials over different variable lists
//! is a usage error.
//!
//! ```
//! use duval::poly::Poly;
//!
//! let v = ["x", "y", "z"];
//! let f = Poly::parse("x^2 + y^2 - z^4", &v).unwrap();
//! assert_eq!(f.partial("z").unwrap().to_string(), "-4*z^3");
//! ```

mod order;
mod parse;
mod ratfn;
mod reduce;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{usage, Error, Result};

pub use order::MonomialOrder;
pub use ratfn::RatFn;
pub use reduce::{certified_quotient, normal_form, Certified};

/// Exact rational scalar.
pub type Rat = num_rational::BigRational;

/// Exponent vector, one entry per variable.
pub type Exponent = Vec<u32>;

/// Builds the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Lossy conversion used by floating evaluators.
pub fn rat_to_f64(r: &Rat) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // scale down huge numerators/denominators before dividing
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(900);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Closest rational with denominator at most `max_den` (ties broken towards
/// the smaller denominator).
pub fn nearest_rational(x: f64, max_den: i64) -> Rat {
    let mut best = (f64::INFINITY, int(0));
    for d in 1..=max_den {
        let n = (x * d as f64).round() as i64;
        let err = (x - n as f64 / d as f64).abs();
        if err < best.0 - 1e-15 {
            best = (err, rat(n, d));
        }
    }
    best.1
}

/// Sparse multivariate polynomial with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    vars: Arc<[String]>,
    terms: BTreeMap<Exponent, Rat>,
}

/// Arithmetic selector for [`poly_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Checked ring operation: fails when the variable lists differ.
pub fn poly_arith(a: &Poly, b: &Poly, op: ArithOp) -> Result<Poly> {
    a.same_vars(b)?;
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
    })
}

impl Poly {
    pub fn zero<S: AsRef<str>>(vars: &[S]) -> Poly {
        Poly {
            vars: vars.iter().map(|s| s.as_ref().to_string()).collect(),
            terms: BTreeMap::new(),
        }
    }

    /// The zero polynomial over the same variables as `self`.
    pub fn zero_like(&self) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant<S: AsRef<str>>(vars: &[S], c: Rat) -> Poly {
        let mut p = Poly::zero(vars);
        p.add_term(vec![0; vars.len()], c);
        p
    }

    pub fn constant_like(&self, c: Rat) -> Poly {
        let mut p = self.zero_like();
        p.add_term(vec![0; self.nvars()], c);
        p
    }

    pub fn one_like(&self) -> Poly {
        self.constant_like(Rat::one())
    }

    /// The coordinate function `name`.
    pub fn var<S: AsRef<str>>(vars: &[S], name: &str) -> Result<Poly> {
        let mut p = Poly::zero(vars);
        let i = p.index_of(name)?;
        let mut e = vec![0; vars.len()];
        e[i] = 1;
        p.add_term(e, Rat::one());
        Ok(p)
    }

    /// The coordinate function with index `i`.
    pub fn var_idx(&self, i: usize) -> Poly {
        let mut p = self.zero_like();
        let mut e = vec![0; self.nvars()];
        e[i] = 1;
        p.add_term(e, Rat::one());
        p
    }

    /// Single term `c * x^e` over the variables of `self`.
    pub fn monomial_like(&self, e: Exponent, c: Rat) -> Poly {
        let mut p = self.zero_like();
        p.add_term(e, c);
        p
    }

    pub fn from_terms<S: AsRef<str>>(
        vars: &[S],
        terms: impl IntoIterator<Item = (Exponent, Rat)>,
    ) -> Result<Poly> {
        let mut p = Poly::zero(vars);
        for (e, c) in terms {
            if e.len() != vars.len() {
                return usage(format!(
                    "exponent of arity {} for {} variables",
                    e.len(),
                    vars.len()
                ));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Usage(format!("unknown variable `{name}`")))
    }

    pub fn same_vars(&self, other: &Poly) -> Result<()> {
        if Arc::ptr_eq(&self.vars, &other.vars) || self.vars == other.vars {
            Ok(())
        } else {
            usage(format!(
                "variable lists differ: {:?} vs {:?}",
                self.vars, other.vars
            ))
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&x| x == 0))
    }

    /// Constant value if `self` is constant.
    pub fn constant_value(&self) -> Option<Rat> {
        if self.is_zero() {
            return Some(Rat::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    /// Coefficient of the monomial `e`.
    pub fn coeff(&self, e: &[u32]) -> Rat {
        self.terms.get(e).cloned().unwrap_or_else(Rat::zero)
    }

    pub(crate) fn add_term(&mut self, e: Exponent, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub(crate) fn remove_term(&mut self, e: &[u32]) {
        self.terms.remove(e);
    }

    /// Total degree (`0` for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    /// Indices of variables occurring with positive exponent.
    pub fn support_vars(&self) -> Vec<usize> {
        (0..self.nvars())
            .filter(|&i| self.terms.keys().any(|e| e[i] > 0))
            .collect()
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return self.zero_like();
        }
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    /// Multiplies by the monomial `c * x^e`.
    pub fn mul_term(&self, e: &[u32], c: &Rat) -> Poly {
        if c.is_zero() {
            return self.zero_like();
        }
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(f, a)| (f.iter().zip(e).map(|(x, y)| x + y).collect(), a * c))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut result = self.one_like();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = &result * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Formal partial derivative with respect to `var`.
    pub fn partial(&self, var: &str) -> Result<Poly> {
        let i = self.index_of(var)?;
        Ok(self.partial_idx(i))
    }

    pub fn partial_idx(&self, i: usize) -> Poly {
        let mut p = self.zero_like();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                p.add_term(f, c * int(e[i] as i64));
            }
        }
        p
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.nvars()).map(|i| self.partial_idx(i)).collect()
    }

    /// Componentwise minimum exponent over all terms.
    pub fn monomial_gcd(&self) -> Exponent {
        let mut it = self.terms.keys();
        let mut g = match it.next() {
            Some(e) => e.clone(),
            None => return vec![0; self.nvars()],
        };
        for e in it {
            for (a, b) in g.iter_mut().zip(e) {
                *a = (*a).min(*b);
            }
        }
        g
    }

    /// Exact division by the monomial `x^e`; every term must be divisible.
    pub fn div_monomial(&self, e: &[u32]) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(f, c)| {
                    debug_assert!(f.iter().zip(e).all(|(x, y)| x >= y));
                    (f.iter().zip(e).map(|(x, y)| x - y).collect(), c.clone())
                })
                .collect(),
        }
    }

    /// Writes `self = var^mult * strict` with `strict` not divisible by `var`.
    pub fn exceptional_multiplicity(&self, var: &str) -> Result<(u32, Poly)> {
        let i = self.index_of(var)?;
        if self.is_zero() {
            return usage("exceptional_multiplicity of the zero polynomial");
        }
        let m = self.terms.keys().map(|e| e[i]).min().unwrap_or(0);
        let mut e = vec![0; self.nvars()];
        e[i] = m;
        Ok((m, self.div_monomial(&e)))
    }

    /// Leading term under `order`.
    pub fn leading_term(&self, order: &MonomialOrder) -> Option<(&Exponent, &Rat)> {
        self.terms.iter().max_by(|a, b| order.cmp(a.0, b.0))
    }

    /// Leading coefficient under graded lex in the variable order.
    pub fn leading_coeff(&self) -> Rat {
        self.leading_term(&MonomialOrder::grlex(self.nvars()))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Substitutes polynomials (all over one common variable list) for the
    /// variables of `self`.
    pub fn compose(&self, bindings: &[Poly]) -> Result<Poly> {
        if bindings.len() != self.nvars() {
            return usage(format!(
                "{} bindings for {} variables",
                bindings.len(),
                self.nvars()
            ));
        }
        let Some(first) = bindings.first() else {
            return Ok(self.clone());
        };
        for b in bindings {
            first.same_vars(b)?;
        }
        let mut powers: Vec<Vec<Poly>> = bindings.iter().map(|b| vec![b.one_like()]).collect();
        let mut out = first.zero_like();
        for (e, c) in &self.terms {
            let mut t = first.constant_like(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap() * &bindings[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][k as usize];
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Rewrites `self` over a new variable list given the position of each
    /// current variable in the new list.
    pub fn embed<S: AsRef<str>>(&self, vars: &[S], positions: &[usize]) -> Poly {
        let mut p = Poly::zero(vars);
        for (e, c) in &self.terms {
            let mut f = vec![0; vars.len()];
            for (i, &k) in e.iter().enumerate() {
                f[positions[i]] += k;
            }
            p.add_term(f, c.clone());
        }
        p
    }

    pub fn eval_exact(&self, point: &[Rat]) -> Rat {
        let mut s = Rat::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (x, &k) in point.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(x.clone(), k as usize);
                }
            }
            s += t;
        }
        s
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                rat_to_f64(c)
                    * e.iter()
                        .zip(point)
                        .map(|(&k, x)| x.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    /// Floating-point compiled form for hot evaluation loops.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (rat_to_f64(c), e.iter().map(|&k| k as i32).collect()))
                .collect(),
        }
    }

    /// `lcm` of coefficient denominators over `gcd` of numerators, with the
    /// sign of the graded leading coefficient.
    pub fn content(&self) -> Rat {
        if self.is_zero() {
            return Rat::one();
        }
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for c in self.terms.values() {
            g = g.gcd(c.numer());
            l = l.lcm(c.denom());
        }
        let r = Rat::new(g, l);
        if self.leading_coeff().is_negative() {
            -r
        } else {
            r
        }
    }

    /// `self / content()`.
    pub fn primitive(&self) -> Poly {
        let c = self.content();
        self.scale(&(Rat::one() / c))
    }
}

/// Polynomial compiled to floating point.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<i32>)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| {
                let mut t = *c;
                for (v, &k) in x.iter().zip(e) {
                    if k > 0 {
                        t *= v.powi(k);
                    }
                }
                t
            })
            .sum()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parse::render(self))
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({} in {:?})", self, self.vars)
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.same_vars(rhs).expect("poly add");
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() {
            (self.clone(), rhs)
        } else {
            (rhs.clone(), self)
        };
        for (e, c) in &small.terms {
            big.add_term(e.clone(), c.clone());
        }
        big
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.same_vars(rhs).expect("poly sub");
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), -c);
        }
        p
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.same_vars(rhs).expect("poly mul");
        let mut p = self.zero_like();
        for (e, c) in &self.terms {
            for (f, d) in &rhs.terms {
                p.add_term(e.iter().zip(f).map(|(a, b)| a + b).collect(), c * d);
            }
        }
        p
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rat::one())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

/// `a` divides `b` componentwise.
pub(crate) fn exp_divides(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub(crate) fn exp_coprime(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0)
}

pub(crate) fn cmp_grlex(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: [&str; 3] = ["x", "y", "z"];

    fn p(s: &str) -> Poly {
        Poly::parse(s, &V).unwrap()
    }

    #[test]
    fn arith_examples() {
        assert_eq!(poly_arith(&p("x^2"), &p("y^2"), ArithOp::Add).unwrap(), p("x^2 + y^2"));
        assert_eq!(poly_arith(&p("x + y"), &p("x - y"), ArithOp::Mul).unwrap(), p("x^2 - y^2"));
        let z = poly_arith(&p("z^4"), &p("z^4"), ArithOp::Sub).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.num_terms(), 0);
    }

    #[test]
    fn mismatched_vars_is_usage_error() {
        let a = Poly::parse("u", &["u", "v"]).unwrap();
        assert!(matches!(poly_arith(&a, &p("x"), ArithOp::Add), Err(Error::Usage(_))));
    }

    #[test]
    fn partial_examples() {
        let f = p("x^2 + y^2 - z^4");
        assert_eq!(f.partial("z").unwrap(), p("-4*z^3"));
        assert_eq!(f.partial("x").unwrap(), p("2*x"));
        let c = Poly::parse("7", &["p", "q"]).unwrap();
        assert!(c.partial("p").unwrap().is_zero());
        assert!(matches!(f.partial("w"), Err(Error::Usage(_))));
    }

    #[test]
    fn exceptional_multiplicity_examples() {
        let w = ["u", "v", "z"];
        let t = Poly::parse("u^2*z^2 + v^2*z^2 - z^4", &w).unwrap();
        let (m, s) = t.exceptional_multiplicity("z").unwrap();
        assert_eq!(m, 2);
        assert_eq!(s, Poly::parse("u^2 + v^2 - z^2", &w).unwrap());
        let leaf = Poly::parse("u^2 + v^2 - 1", &w).unwrap();
        assert_eq!(leaf.exceptional_multiplicity("z").unwrap(), (0, leaf.clone()));
        let (m, s) = Poly::parse("z^5", &w).unwrap().exceptional_multiplicity("z").unwrap();
        assert_eq!((m, s.to_string()), (5, "1".to_string()));
    }

    #[test]
    fn compose_blowup_chart() {
        let f = p("x^2 + y^2 - z^4");
        let c = f.compose(&[p("x*z"), p("y*z"), p("z")]).unwrap();
        assert_eq!(c, p("x^2*z^2 + y^2*z^2 - z^4"));
    }

    #[test]
    fn nearest_rational_picks_small_denominators() {
        assert_eq!(nearest_rational(0.3333333334, 16), rat(1, 3));
        assert_eq!(nearest_rational(-1.0000000002, 16), int(-1));
        assert_eq!(nearest_rational(1e-12, 16), int(0));
    }

    #[test]
    fn content_and_primitive() {
        let f = p("-3/2*x^2 + 3*y");
        assert_eq!(f.content(), rat(-3, 2));
        assert_eq!(f.primitive(), p("x^2 - 2*y"));
    }
}
