use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::reduce::divide;
use super::{normal_form, MonomialOrder, Poly, Rat};
use crate::error::{usage, Error, Result};

/// Quotient of two polynomials over the same variables.
///
/// Normalized on construction: common monomial factors are cancelled, exact
/// polynomial division is attempted, univariate pairs are reduced by their
/// gcd, and the denominator is made monic in graded-lex order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Result<RatFn> {
        num.same_vars(&den)?;
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        Ok(Self::normalized(num, den))
    }

    pub fn from_poly(p: Poly) -> RatFn {
        let den = p.one_like();
        RatFn { num: p, den }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn vars(&self) -> &[String] {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial this function equals, if the denominator is constant.
    pub fn as_poly(&self) -> Option<Poly> {
        self.den
            .constant_value()
            .map(|c| self.num.scale(&(Rat::one() / c)))
    }

    fn normalized(num: Poly, den: Poly) -> RatFn {
        if num.is_zero() {
            let one = den.one_like();
            return RatFn { num, den: one };
        }
        let gn = num.monomial_gcd();
        let gd = den.monomial_gcd();
        let g: Vec<u32> = gn.iter().zip(&gd).map(|(a, b)| (*a).min(*b)).collect();
        let (mut num, mut den) = if g.iter().any(|&k| k > 0) {
            (num.div_monomial(&g), den.div_monomial(&g))
        } else {
            (num, den)
        };
        if den.num_terms() > 1 {
            let order = MonomialOrder::lex(num.nvars());
            let (q, r) = divide(&num, &[&den], &order);
            if r.is_zero() {
                num = q.into_iter().next().unwrap();
                den = den.one_like();
            } else {
                let sn = num.support_vars();
                let sd = den.support_vars();
                if sd.len() == 1 && (sn.is_empty() || sn == sd) {
                    let g = univariate_gcd(&num, &den);
                    if g.degree() > 0 {
                        num = divide(&num, &[&g], &order).0.remove(0);
                        den = divide(&den, &[&g], &order).0.remove(0);
                    }
                }
            }
        }
        let lc = den.leading_coeff();
        if !lc.is_one() {
            let inv = Rat::one() / lc;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RatFn { num, den }
    }

    pub fn add(&self, o: &RatFn) -> RatFn {
        if self.den == o.den {
            return Self::normalized(&self.num + &o.num, self.den.clone());
        }
        if self.den.num_terms() == 1 && o.den.num_terms() == 1 {
            // lcm of monomial denominators
            let (ea, ca) = self.den.terms().next().unwrap();
            let (eb, cb) = o.den.terms().next().unwrap();
            let l: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| (*a).max(*b)).collect();
            let fa: Vec<u32> = l.iter().zip(ea).map(|(a, b)| a - b).collect();
            let fb: Vec<u32> = l.iter().zip(eb).map(|(a, b)| a - b).collect();
            let num = &self.num.mul_term(&fa, &(Rat::one() / ca))
                + &o.num.mul_term(&fb, &(Rat::one() / cb));
            let den = self.den.monomial_like(l, Rat::one());
            return Self::normalized(num, den);
        }
        Self::normalized(
            &(&self.num * &o.den) + &(&o.num * &self.den),
            &self.den * &o.den,
        )
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &RatFn) -> RatFn {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RatFn) -> RatFn {
        Self::normalized(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn mul_poly(&self, p: &Poly) -> RatFn {
        Self::normalized(&self.num * p, self.den.clone())
    }

    pub fn div(&self, o: &RatFn) -> Result<RatFn> {
        if o.is_zero() {
            return Err(Error::Domain("division by the zero function".into()));
        }
        Ok(Self::normalized(&self.num * &o.den, &self.den * &o.num))
    }

    pub fn pow(&self, n: u32) -> RatFn {
        Self::normalized(self.num.pow(n), self.den.pow(n))
    }

    /// Quotient rule.
    pub fn partial(&self, var: &str) -> Result<RatFn> {
        let i = self.num.index_of(var)?;
        Ok(self.partial_idx(i))
    }

    pub fn partial_idx(&self, i: usize) -> RatFn {
        let dn = self.num.partial_idx(i);
        if self.den.is_constant() {
            return Self::normalized(dn, self.den.clone());
        }
        let dd = self.den.partial_idx(i);
        Self::normalized(
            &(&dn * &self.den) - &(&self.num * &dd),
            &self.den * &self.den,
        )
    }

    /// Replaces the numerator by its normal form modulo `gen` in `order`.
    pub fn reduce_mod(&self, gen: &Poly, order: &MonomialOrder) -> Result<RatFn> {
        if gen.is_zero() {
            return usage("reduce_mod by the zero polynomial");
        }
        self.num.same_vars(gen)?;
        Ok(Self::normalized(normal_form(&self.num, gen, order), self.den.clone()))
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }

    pub fn eval_exact(&self, x: &[Rat]) -> Option<Rat> {
        let d = self.den.eval_exact(x);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval_exact(x) / d)
        }
    }

    /// Substitutes rational functions for every variable.
    pub fn substitute(&self, bindings: &BTreeMap<String, RatFn>) -> Result<RatFn> {
        let n = self.num.substitute(bindings)?;
        let d = self.den.substitute(bindings)?;
        n.div(&d)
    }
}

impl Poly {
    /// Substitutes rational functions (over one common variable list) for the
    /// variables of `self`.
    ///
    /// The result's denominator is the product of the binding denominators
    /// raised to the largest power needed, then normalized.
    pub fn substitute(&self, bindings: &BTreeMap<String, RatFn>) -> Result<RatFn> {
        let mut bs: Vec<Option<&RatFn>> = Vec::with_capacity(self.nvars());
        for (i, v) in self.vars().iter().enumerate() {
            let b = bindings.get(v);
            if b.is_none() && self.degree_in(i) > 0 {
                return usage(format!("variable `{v}` is not bound"));
            }
            bs.push(b);
        }
        let Some(first) = bindings.values().next() else {
            return Ok(RatFn::from_poly(self.clone()));
        };
        for b in bindings.values() {
            first.num.same_vars(&b.num)?;
        }
        let target = first.num.zero_like();
        let maxe: Vec<u32> = (0..self.nvars()).map(|i| self.degree_in(i)).collect();
        let mut den = target.one_like();
        for (i, b) in bs.iter().enumerate() {
            if let Some(b) = b {
                if maxe[i] > 0 && !b.den.is_constant() {
                    den = &den * &b.den.pow(maxe[i]);
                }
            }
        }
        let mut npow: Vec<Vec<Poly>> = bs.iter().map(|_| vec![target.one_like()]).collect();
        let mut dpow: Vec<Vec<Poly>> = bs.iter().map(|_| vec![target.one_like()]).collect();
        let mut num = target.zero_like();
        for (e, c) in self.terms() {
            let mut t = target.constant_like(c.clone());
            for (i, &k) in e.iter().enumerate() {
                let Some(b) = bs[i] else { continue };
                if maxe[i] == 0 {
                    continue;
                }
                let const_den = b.den.constant_value();
                while npow[i].len() <= k as usize {
                    let next = npow[i].last().unwrap() * &b.num;
                    npow[i].push(next);
                }
                t = &t * &npow[i][k as usize];
                match const_den {
                    Some(c) => t = t.scale(&(Rat::one() / num_traits::pow(c, k as usize))),
                    None => {
                        let need = (maxe[i] - k) as usize;
                        while dpow[i].len() <= need {
                            let next = dpow[i].last().unwrap() * &b.den;
                            dpow[i].push(next);
                        }
                        t = &t * &dpow[i][need];
                    }
                }
            }
            num = &num + &t;
        }
        RatFn::new(num, den)
    }
}

/// Monic gcd of two polynomials in one common variable.
fn univariate_gcd(a: &Poly, b: &Poly) -> Poly {
    let order = MonomialOrder::lex(a.nvars());
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_zero() {
        let r = normal_form(&a, &b, &order);
        a = b;
        b = r;
    }
    let lc = a.leading_coeff();
    a.scale(&(Rat::one() / lc))
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() && self.den.constant_value() == Some(Rat::one()) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFn({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: [&str; 3] = ["x", "y", "z"];

    fn p(s: &str) -> Poly {
        Poly::parse(s, &V).unwrap()
    }

    fn r(n: &str, d: &str) -> RatFn {
        RatFn::new(p(n), p(d)).unwrap()
    }

    fn chart_bindings() -> BTreeMap<String, RatFn> {
        [("x", "x*z"), ("y", "y*z"), ("z", "z")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), RatFn::from_poly(p(v))))
            .collect()
    }

    #[test]
    fn normalization_cancels_monomials_and_factors() {
        assert_eq!(r("x*z^2", "z^3"), r("x", "z"));
        assert_eq!(r("x^2 - 1", "2*x - 2"), r("1/2*x + 1/2", "1"));
        assert_eq!(r("x^2 - 1", "x^2 + 2*x + 1"), r("x - 1", "x + 1"));
        assert_eq!(r("x", "-2*z").den(), &p("z"));
        assert!(RatFn::new(p("x"), p("0")).is_err());
    }

    #[test]
    fn substitute_examples() {
        let f = p("x^2 + y^2 - z^4");
        let s = f.substitute(&chart_bindings()).unwrap();
        assert_eq!(s.as_poly().unwrap(), p("z^2*(x^2 + y^2 - z^2)"));
        let id: BTreeMap<_, _> = V
            .iter()
            .map(|v| (v.to_string(), RatFn::from_poly(p(v))))
            .collect();
        assert_eq!(f.substitute(&id).unwrap().as_poly().unwrap(), f);
        let g = r("x", "z^2").substitute(&chart_bindings()).unwrap();
        assert_eq!(g, r("x", "z"));
    }

    #[test]
    fn reduce_mod_examples() {
        let gen = p("x^2 + y^2 - z^4");
        let lex = MonomialOrder::lex(3);
        assert_eq!(r("x^2 + y^2", "z^3").reduce_mod(&gen, &lex).unwrap(), r("z", "1"));
        let f = r("y", "z");
        assert_eq!(f.reduce_mod(&gen, &lex).unwrap(), f);
        assert!(r("0", "1").reduce_mod(&gen, &lex).unwrap().is_zero());
    }

    #[test]
    fn quotient_rule() {
        let f = r("x", "z");
        assert_eq!(f.partial("z").unwrap(), r("-x", "z^2"));
        assert_eq!(f.partial("x").unwrap(), r("1", "z"));
    }

    #[test]
    fn add_with_monomial_denominators() {
        assert_eq!(r("x", "z").add(&r("y", "z^2")), r("x*z + y", "z^2"));
        assert_eq!(r("1", "x - 1").add(&r("1", "x + 1")), r("2*x", "x^2 - 1"));
    }
}
