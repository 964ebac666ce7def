//! Exact algebra spanned by `π^e q^a θ^b cos(nθ)` and `π^e q^a θ^b sin(nθ)`
//! with `θ = 2πp/q`.
//!
//! ```
//! use duval::poly::rat;
//! use duval::trig::TrigPoly;
//!
//! let x = TrigPoly::q_pow_cos(2, 1);
//! let y = TrigPoly::q_pow_sin(2, 1);
//! let z = TrigPoly::q_pow(1);
//! // {x, y} at scale 1/π is -4 q^3
//! assert_eq!(x.log_bracket(&y, &rat(1, 1)), TrigPoly::q_pow(3).scale(&rat(-4, 1)));
//! assert_eq!(&(&x * &x) + &(&y * &y), z.pow(4));
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{int, rat, rat_to_f64, Poly, Rat, RatFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Kind {
    Cos,
    Sin,
}

/// Exponents and frequency of one basis element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrigKey {
    /// power of π
    pub e: i32,
    /// power of q
    pub a: i32,
    /// power of θ
    pub b: u32,
    /// frequency
    pub n: u32,
    pub kind: Kind,
}

impl TrigKey {
    pub fn scalar(e: i32, a: i32) -> TrigKey {
        TrigKey {
            e,
            a,
            b: 0,
            n: 0,
            kind: Kind::Cos,
        }
    }
}

/// Finite linear combination of [`TrigKey`] basis elements.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct TrigPoly {
    terms: BTreeMap<TrigKey, Rat>,
}

impl TrigPoly {
    pub fn zero() -> TrigPoly {
        TrigPoly::default()
    }

    pub fn constant(c: Rat) -> TrigPoly {
        TrigPoly::term(TrigKey::scalar(0, 0), c)
    }

    pub fn one() -> TrigPoly {
        TrigPoly::constant(Rat::one())
    }

    pub fn term(key: TrigKey, c: Rat) -> TrigPoly {
        let mut t = TrigPoly::zero();
        t.add_term(key, c);
        t
    }

    pub fn q_pow(a: i32) -> TrigPoly {
        TrigPoly::term(TrigKey::scalar(0, a), Rat::one())
    }

    pub fn pi_pow(e: i32) -> TrigPoly {
        TrigPoly::term(TrigKey::scalar(e, 0), Rat::one())
    }

    /// `q^a cos(nθ)`.
    pub fn q_pow_cos(a: i32, n: u32) -> TrigPoly {
        TrigPoly::term(
            TrigKey {
                e: 0,
                a,
                b: 0,
                n,
                kind: Kind::Cos,
            },
            Rat::one(),
        )
    }

    /// `q^a sin(nθ)`.
    pub fn q_pow_sin(a: i32, n: u32) -> TrigPoly {
        TrigPoly::term(
            TrigKey {
                e: 0,
                a,
                b: 0,
                n,
                kind: Kind::Sin,
            },
            Rat::one(),
        )
    }

    /// `θ = 2πp/q`.
    pub fn theta() -> TrigPoly {
        TrigPoly::term(
            TrigKey {
                e: 0,
                a: 0,
                b: 1,
                n: 0,
                kind: Kind::Cos,
            },
            Rat::one(),
        )
    }

    /// `p = qθ/(2π)`.
    pub fn p() -> TrigPoly {
        TrigPoly::term(
            TrigKey {
                e: -1,
                a: 1,
                b: 1,
                n: 0,
                kind: Kind::Cos,
            },
            rat(1, 2),
        )
    }

    pub(crate) fn add_term(&mut self, key: TrigKey, c: Rat) {
        if c.is_zero() || (key.kind == Kind::Sin && key.n == 0) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
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

    pub fn terms(&self) -> impl Iterator<Item = (&TrigKey, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether any term carries a power of θ.
    pub fn has_theta_powers(&self) -> bool {
        self.terms.keys().any(|k| k.b > 0)
    }

    pub fn scale(&self, c: &Rat) -> TrigPoly {
        let mut t = TrigPoly::zero();
        for (k, v) in &self.terms {
            t.add_term(*k, v * c);
        }
        t
    }

    /// Multiplies by `π^e q^a`.
    pub fn shift(&self, e: i32, a: i32) -> TrigPoly {
        TrigPoly {
            terms: self
                .terms
                .iter()
                .map(|(k, v)| {
                    (
                        TrigKey {
                            e: k.e + e,
                            a: k.a + a,
                            ..*k
                        },
                        v.clone(),
                    )
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> TrigPoly {
        let mut r = TrigPoly::one();
        for _ in 0..n {
            r = &r * self;
        }
        r
    }

    /// `∂/∂p`, using `∂θ/∂p = 2π/q`.
    pub fn partial_p(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (k, c) in &self.terms {
            let base = TrigKey {
                e: k.e + 1,
                a: k.a - 1,
                ..*k
            };
            if k.b > 0 {
                out.add_term(TrigKey { b: k.b - 1, ..base }, c * int(2 * k.b as i64));
            }
            if k.n > 0 {
                let (kind, sign) = derivative_kind(k.kind);
                out.add_term(TrigKey { kind, ..base }, c * int(2 * sign * k.n as i64));
            }
        }
        out
    }

    /// `∂/∂q`, using `∂θ/∂q = -θ/q`.
    pub fn partial_q(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        for (k, c) in &self.terms {
            let base = TrigKey { a: k.a - 1, ..*k };
            out.add_term(base, c * int(k.a as i64 - k.b as i64));
            if k.n > 0 {
                let (kind, sign) = derivative_kind(k.kind);
                out.add_term(
                    TrigKey {
                        b: k.b + 1,
                        kind,
                        ..base
                    },
                    c * int(-sign * k.n as i64),
                );
            }
        }
        out
    }

    /// `(scale/π) · q · (∂f/∂p ∂g/∂q − ∂f/∂q ∂g/∂p)`.
    pub fn log_bracket(&self, g: &TrigPoly, scale: &Rat) -> TrigPoly {
        let j = &(&self.partial_p() * &g.partial_q()) - &(&self.partial_q() * &g.partial_p());
        j.shift(-1, 1).scale(scale)
    }

    /// Evaluates at `(p, q)`. At `q = 0` only terms with a vanishing limit
    /// or pure constants are admitted.
    pub fn eval(&self, p: f64, q: f64) -> Result<f64> {
        if q == 0.0 {
            let mut s = 0.0;
            for (k, c) in &self.terms {
                if k.a > k.b as i32 {
                    continue;
                }
                if k.a == 0 && k.b == 0 && k.n == 0 {
                    s += rat_to_f64(c) * PI.powi(k.e);
                    continue;
                }
                return Err(Error::Domain(format!(
                    "term {} has no limit at q = 0",
                    TrigPoly::term(*k, c.clone())
                )));
            }
            return Ok(s);
        }
        let th = 2.0 * PI * p / q;
        Ok(self
            .terms
            .iter()
            .map(|(k, c)| {
                let t = match k.kind {
                    Kind::Cos => (k.n as f64 * th).cos(),
                    Kind::Sin => (k.n as f64 * th).sin(),
                };
                rat_to_f64(c) * PI.powi(k.e) * q.powi(k.a) * th.powi(k.b as i32) * t
            })
            .sum())
    }

    /// Composes a polynomial with TrigPoly values for its variables.
    pub fn eval_poly(p: &Poly, comps: &[TrigPoly]) -> TrigPoly {
        let mut powers: Vec<Vec<TrigPoly>> = comps.iter().map(|_| vec![TrigPoly::one()]).collect();
        let mut out = TrigPoly::zero();
        for (e, c) in p.terms() {
            let mut t = TrigPoly::constant(c.clone());
            for (i, &k) in e.iter().enumerate() {
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap() * &comps[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][k as usize];
            }
            out = &out + &t;
        }
        out
    }

    /// Pulls back `num/den`; the denominator must become a single
    /// `π^e q^a` term.
    pub fn eval_ratfn(f: &RatFn, comps: &[TrigPoly]) -> Result<TrigPoly> {
        let n = TrigPoly::eval_poly(f.num(), comps);
        let d = TrigPoly::eval_poly(f.den(), comps);
        let mut it = d.terms.iter();
        match (it.next(), it.next()) {
            (Some((k, c)), None) if k.b == 0 && k.n == 0 => {
                Ok(n.shift(-k.e, -k.a).scale(&(Rat::one() / c)))
            }
            _ => Err(Error::Domain(format!(
                "denominator pulls back to {d}, not a monomial"
            ))),
        }
    }

    /// Fourier modes of a θ-power-free, π-free element: for each frequency,
    /// the cosine and sine coefficients as Laurent polynomials in `q`
    /// (`a ↦ coefficient`).
    pub fn modes(&self) -> Option<BTreeMap<(u32, Kind), BTreeMap<i32, Rat>>> {
        let mut out: BTreeMap<(u32, Kind), BTreeMap<i32, Rat>> = BTreeMap::new();
        for (k, c) in &self.terms {
            if k.b > 0 || k.e != 0 {
                return None;
            }
            *out.entry((k.n, k.kind))
                .or_default()
                .entry(k.a)
                .or_insert_with(Rat::zero) += c;
        }
        Some(out)
    }
}

fn derivative_kind(k: Kind) -> (Kind, i64) {
    match k {
        Kind::Cos => (Kind::Sin, -1),
        Kind::Sin => (Kind::Cos, 1),
    }
}

/// Linearizes the product of two basis trig factors.
fn trig_product(k1: Kind, n1: u32, k2: Kind, n2: u32) -> [(Kind, u32, i64); 2] {
    let sum = n1 + n2;
    let (diff, flip) = if n1 >= n2 { (n1 - n2, 1) } else { (n2 - n1, -1) };
    match (k1, k2) {
        (Kind::Cos, Kind::Cos) => [(Kind::Cos, diff, 1), (Kind::Cos, sum, 1)],
        (Kind::Sin, Kind::Sin) => [(Kind::Cos, diff, 1), (Kind::Cos, sum, -1)],
        (Kind::Sin, Kind::Cos) => [(Kind::Sin, sum, 1), (Kind::Sin, diff, flip)],
        (Kind::Cos, Kind::Sin) => [(Kind::Sin, sum, 1), (Kind::Sin, diff, -flip)],
    }
}

impl<'a> Mul<&'a TrigPoly> for &'a TrigPoly {
    type Output = TrigPoly;
    fn mul(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = TrigPoly::zero();
        let half = rat(1, 2);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &rhs.terms {
                let c = c1 * c2;
                let base = TrigKey {
                    e: k1.e + k2.e,
                    a: k1.a + k2.a,
                    b: k1.b + k2.b,
                    n: 0,
                    kind: Kind::Cos,
                };
                if k1.n == 0 && k1.kind == Kind::Cos {
                    out.add_term(TrigKey { n: k2.n, kind: k2.kind, ..base }, c);
                    continue;
                }
                if k2.n == 0 && k2.kind == Kind::Cos {
                    out.add_term(TrigKey { n: k1.n, kind: k1.kind, ..base }, c);
                    continue;
                }
                for (kind, n, sign) in trig_product(k1.kind, k1.n, k2.kind, k2.n) {
                    out.add_term(TrigKey { n, kind, ..base }, &c * &half * int(sign));
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a TrigPoly> for &'a TrigPoly {
    type Output = TrigPoly;
    fn add(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(*k, c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a TrigPoly> for &'a TrigPoly {
    type Output = TrigPoly;
    fn sub(self, rhs: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(*k, -c);
        }
        out
    }
}

impl Neg for &TrigPoly {
    type Output = TrigPoly;
    fn neg(self) -> TrigPoly {
        self.scale(&-Rat::one())
    }
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            let a = c.abs();
            if !a.is_one() {
                factors.push(a.to_string());
            }
            let pw = |name: &str, e: i64| match e {
                1 => name.to_string(),
                _ => format!("{name}^{e}"),
            };
            if k.e != 0 {
                factors.push(pw("pi", k.e as i64));
            }
            if k.a != 0 {
                factors.push(pw("q", k.a as i64));
            }
            if k.b != 0 {
                factors.push(pw("theta", k.b as i64));
            }
            if k.n != 0 {
                let name = match k.kind {
                    Kind::Cos => "cos",
                    Kind::Sin => "sin",
                };
                if k.n == 1 {
                    factors.push(format!("{name}(theta)"));
                } else {
                    factors.push(format!("{name}({}*theta)", k.n));
                }
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TrigPoly({self})")
    }
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn key() -> impl Strategy<Value = (TrigKey, i64)> {
        (-1i32..=1, -2i32..=3, 0u32..=2, 0u32..=3, any::<bool>(), -3i64..=3).prop_map(
            |(e, a, b, n, s, c)| {
                (
                    TrigKey {
                        e,
                        a,
                        b,
                        n,
                        kind: if s { Kind::Sin } else { Kind::Cos },
                    },
                    c,
                )
            },
        )
    }

    fn tp() -> impl Strategy<Value = TrigPoly> {
        prop::collection::vec(key(), 0..4).prop_map(|ts| {
            let mut t = TrigPoly::zero();
            for (k, c) in ts {
                t.add_term(k, int(c));
            }
            t
        })
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn product_examples() {
        let x = TrigPoly::q_pow_cos(2, 1);
        let y = TrigPoly::q_pow_sin(2, 1);
        assert_eq!(&(&x * &x) + &(&y * &y), TrigPoly::q_pow(4));
        let c = TrigPoly::q_pow_cos(0, 1);
        let expect = &TrigPoly::constant(rat(1, 2)) + &TrigPoly::q_pow_cos(0, 2).scale(&rat(1, 2));
        assert_eq!(&c * &c, expect);
        assert!((&c * &TrigPoly::zero()).is_zero());
    }

    #[test]
    fn partial_examples() {
        for k in 2..5 {
            let x = TrigPoly::q_pow_cos(k, 1);
            let dp = TrigPoly::q_pow_sin(k - 1, 1).shift(1, 0).scale(&int(-2));
            assert_eq!(x.partial_p(), dp);
            let theta_sin = TrigPoly::term(
                TrigKey {
                    e: 0,
                    a: k - 1,
                    b: 1,
                    n: 1,
                    kind: Kind::Sin,
                },
                Rat::one(),
            );
            let dq = &TrigPoly::q_pow_cos(k - 1, 1).scale(&int(k as i64)) + &theta_sin;
            assert_eq!(x.partial_q(), dq);
        }
        assert!(TrigPoly::q_pow(3).partial_p().is_zero());
    }

    #[test]
    fn bracket_examples() {
        let pq = TrigPoly::p().log_bracket(&TrigPoly::q_pow(1), &rat(1, 2));
        assert_eq!(pq, TrigPoly::q_pow(1).shift(-1, 0).scale(&rat(1, 2)));

        let x = TrigPoly::q_pow_cos(2, 1);
        let y = TrigPoly::q_pow_sin(2, 1);
        assert_eq!(x.log_bracket(&y, &int(1)), TrigPoly::q_pow(3).scale(&int(-4)));

        // G' generators, k = 2
        let x = TrigPoly::q_pow_cos(4, 1);
        let y = TrigPoly::q_pow_sin(5, 1);
        let z = TrigPoly::q_pow(2);
        let yz = y.log_bracket(&z, &rat(1, 2));
        assert_eq!(yz, (&z * &x).scale(&int(2)));
        assert!(!yz.has_theta_powers());
    }

    #[test]
    fn q_zero_evaluation() {
        let x = TrigPoly::q_pow_cos(2, 1);
        assert_eq!(x.eval(0.7, 0.0).unwrap(), 0.0);
        assert_eq!(TrigPoly::constant(int(3)).eval(0.7, 0.0).unwrap(), 3.0);
        assert!(TrigPoly::q_pow_cos(0, 1).eval(0.7, 0.0).is_err());
        assert!(TrigPoly::q_pow(-1).eval(0.0, 0.0).is_err());
    }

    #[test]
    fn generators_are_invariant() {
        let comps = [TrigPoly::q_pow_cos(3, 1), TrigPoly::q_pow_sin(3, 1), TrigPoly::q_pow(1)];
        for (p, q) in [(0.3, 1.1), (-0.8, 0.4), (2.5, -1.7)] {
            for n in -3..=3 {
                for c in &comps {
                    let a = c.eval(p, q).unwrap();
                    let b = c.eval(p + n as f64 * q, q).unwrap();
                    assert!(close(a, b), "{c} at n = {n}");
                }
            }
        }
    }

    fn sample_points() -> Vec<(f64, f64)> {
        (0..200)
            .map(|i| {
                let t = i as f64;
                let p = (t * 0.7371).sin() * 2.0;
                let q = 0.3 + ((t * 1.913).cos() * 1.4).abs();
                (p, if i % 2 == 0 { q } else { -q })
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mul_commutes_and_associates(a in tp(), b in tp(), c in tp()) {
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        }

        #[test]
        fn partials_obey_leibniz(a in tp(), b in tp()) {
            let ab = &a * &b;
            prop_assert_eq!(ab.partial_p(), &(&a.partial_p() * &b) + &(&a * &b.partial_p()));
            prop_assert_eq!(ab.partial_q(), &(&a.partial_q() * &b) + &(&a * &b.partial_q()));
        }

        #[test]
        fn bracket_antisymmetric_and_jacobi(a in tp(), b in tp(), c in tp()) {
            let s = rat(1, 2);
            prop_assert_eq!(a.log_bracket(&b, &s), -&b.log_bracket(&a, &s));
            let j = &(&a.log_bracket(&b.log_bracket(&c, &s), &s)
                + &b.log_bracket(&c.log_bracket(&a, &s), &s))
                + &c.log_bracket(&a.log_bracket(&b, &s), &s);
            prop_assert!(j.is_zero());
        }

        #[test]
        fn product_matches_floating_evaluation(a in tp(), b in tp()) {
            let ab = &a * &b;
            for (p, q) in sample_points() {
                let lhs = ab.eval(p, q).unwrap();
                let rhs = a.eval(p, q).unwrap() * b.eval(p, q).unwrap();
                prop_assert!(close(lhs, rhs), "{} vs {}", lhs, rhs);
            }
        }

        #[test]
        fn partial_p_matches_finite_difference(a in tp()) {
            let d = a.partial_p();
            for (p, q) in sample_points().into_iter().take(20) {
                let h = 1e-5 * q.abs();
                let fd = (a.eval(p + h, q).unwrap() - a.eval(p - h, q).unwrap()) / (2.0 * h);
                let ex = d.eval(p, q).unwrap();
                prop_assert!((fd - ex).abs() <= 1e-4 * (1.0 + ex.abs()), "{} vs {}", fd, ex);
            }
        }
    }
}
