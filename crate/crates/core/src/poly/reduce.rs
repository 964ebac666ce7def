//! Division by one or two polynomials and certified quotients modulo a
//! principal ideal.

use num_traits::Zero;

use super::{exp_coprime, exp_divides, MonomialOrder, Poly};

/// Remainder of `f` under division by `g` in `order`.
///
/// Since `{g}` is a Gröbner basis of `(g)`, the remainder is zero iff `g`
/// divides `f`.
pub fn normal_form(f: &Poly, g: &Poly, order: &MonomialOrder) -> Poly {
    divide(f, &[g], order).1
}

/// Multivariate division with quotients: `f = Σ q_i g_i + r` and no term of
/// `r` is divisible by any `LT(g_i)`.
pub(crate) fn divide(f: &Poly, gs: &[&Poly], order: &MonomialOrder) -> (Vec<Poly>, Poly) {
    let leads: Vec<_> = gs
        .iter()
        .map(|g| {
            let (e, c) = g.leading_term(order).expect("division by zero polynomial");
            (e.clone(), c.clone())
        })
        .collect();
    let mut quots: Vec<Poly> = gs.iter().map(|_| f.zero_like()).collect();
    let mut rem = f.zero_like();
    let mut p = f.clone();
    while let Some((e, c)) = p.leading_term(order).map(|(e, c)| (e.clone(), c.clone())) {
        let hit = leads.iter().position(|(le, _)| exp_divides(le, &e));
        match hit {
            Some(i) => {
                let (le, lc) = &leads[i];
                let qe: Vec<u32> = e.iter().zip(le).map(|(a, b)| a - b).collect();
                let qc = &c / lc;
                p = &p - &gs[i].mul_term(&qe, &qc);
                quots[i].add_term(qe, qc);
            }
            None => {
                rem.add_term(e.clone(), c);
                p.remove_term(&e);
            }
        }
    }
    (quots, rem)
}

/// Outcome of asking whether `num/den` is a polynomial modulo `gen`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certified {
    /// `num ≡ q·den (mod gen)`; `q` is reduced modulo `gen`.
    Quotient(Poly),
    /// `num ∉ (gen, den)`: no polynomial represents `num/den` on `{gen = 0}`.
    NotInRing,
    /// No monomial order with coprime leading terms was found.
    Undecided,
}

/// Decides whether `num/den` agrees with a polynomial on `{gen = 0}`.
///
/// Picks a monomial order in which the leading monomials of `gen` and `den`
/// are coprime, so `{gen, den}` is a Gröbner basis; membership of `num` in
/// `(gen, den)` is then decided by the remainder of the division.
pub fn certified_quotient(num: &Poly, den: &Poly, gen: &Poly) -> Certified {
    let (num, den) = invert_unit_variables(num, den, gen);
    let (num, den) = (&num, &den);
    if let Some(c) = den.constant_value() {
        if c.is_zero() {
            return Certified::NotInRing;
        }
        let q = num.scale(&(num_rational::BigRational::from_integer(1.into()) / c));
        let order = MonomialOrder::lex(num.nvars());
        return Certified::Quotient(normal_form(&q, gen, &order));
    }
    for order in MonomialOrder::all(num.nvars()) {
        let (lg, _) = gen.leading_term(&order).expect("nonzero generator");
        let (ld, _) = den.leading_term(&order).expect("nonzero denominator");
        if !exp_coprime(lg, ld) {
            continue;
        }
        let (q, r) = divide(num, &[gen, den], &order);
        if !r.is_zero() {
            return Certified::NotInRing;
        }
        let lex = MonomialOrder::lex(num.nvars());
        return Certified::Quotient(normal_form(&q[1], gen, &lex));
    }
    Certified::Undecided
}

/// Clears the variables of a monomial `den` that are units on `{gen = 0}`.
///
/// If `gen = c + v·h` with `c` a nonzero constant then `1/v ≡ −h/c`.
fn invert_unit_variables(num: &Poly, den: &Poly, gen: &Poly) -> (Poly, Poly) {
    if den.num_terms() != 1 {
        return (num.clone(), den.clone());
    }
    let (e, c) = den.terms().next().map(|(e, c)| (e.clone(), c.clone())).unwrap();
    let mut num = num.clone();
    let mut rest = e.clone();
    for v in 0..e.len() {
        if e[v] == 0 {
            continue;
        }
        let mut h = gen.zero_like();
        let mut c0 = gen.zero_like();
        for (ge, gc) in gen.terms() {
            if ge[v] > 0 {
                let mut d = ge.clone();
                d[v] -= 1;
                h.add_term(d, gc.clone());
            } else {
                c0.add_term(ge.clone(), gc.clone());
            }
        }
        let Some(k) = c0.constant_value().filter(|k| !k.is_zero()) else {
            continue;
        };
        let inv = h.scale(&(-(num_rational::BigRational::from_integer(1.into()) / k)));
        num = &num * &inv.pow(e[v]);
        rest[v] = 0;
    }
    (num, den.monomial_like(rest, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: [&str; 3] = ["x", "y", "z"];

    fn p(s: &str) -> Poly {
        Poly::parse(s, &V).unwrap()
    }

    #[test]
    fn normal_form_lex() {
        let g = p("x^2 + y^2 - z^4");
        let nf = normal_form(&p("x^2 + y^2"), &g, &MonomialOrder::lex(3));
        assert_eq!(nf, p("z^4"));
        assert!(normal_form(&(&g * &p("x*y + 3")), &g, &MonomialOrder::grlex(3)).is_zero());
    }

    #[test]
    fn unit_variable_inverted() {
        let g = p("x^2*y*z - y^3*z^5 + 1");
        match certified_quotient(&p("x"), &p("y^2"), &g) {
            Certified::Quotient(q) => {
                assert!(normal_form(&(&(&q * &p("y^2")) - &p("x")), &g, &MonomialOrder::lex(3)).is_zero())
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certified_cancellation() {
        // on x^2 + y^2 = z^4, (x^2 + y^2)/z^3 is the polynomial z
        let g = p("x^2 + y^2 - z^4");
        assert_eq!(certified_quotient(&p("x^2 + y^2"), &p("z^3"), &g), Certified::Quotient(p("z")));
        // x/z is not regular on x^2 + y^2 = 1
        let leaf = p("x^2 + y^2 - 1");
        assert_eq!(certified_quotient(&p("x"), &p("z"), &leaf), Certified::NotInRing);
    }

    #[test]
    fn certified_with_nonmonomial_denominator() {
        let g = p("x^2 + y^2 - 1");
        // (1 - y^2)/(x) = x on the circle
        assert_eq!(certified_quotient(&p("1 - y^2"), &p("x"), &g), Certified::Quotient(p("x")));
        // (x + 1)*(y - 2) / (y - 2) = x + 1 everywhere
        let num = p("(x + 1)*(y - 2)");
        assert_eq!(certified_quotient(&num, &p("y - 2"), &g), Certified::Quotient(p("x + 1")));
    }
}
