use rayon::prelude::*;
use serde::Serialize;

use super::QuotientMap;
use crate::blowup::ResolutionAtlas;
use crate::error::{usage, Result};
use crate::fourier::Group;
use crate::poly::{certified_quotient, normal_form, Certified, MonomialOrder, Poly, RatFn};
use crate::trig::TrigPoly;

fn z_pow(v: &Poly, e: u32) -> Poly {
    v.var_idx(2).pow(e)
}

fn ratfn(num: Poly, den: Poly) -> RatFn {
    RatFn::new(num, den).expect("nonzero denominator")
}

/// `(x_n, y_n)` for `1 ≤ n ≤ n_max` as rational functions on the target,
/// numerators reduced modulo its defining polynomial.
///
/// For `G`: `x_n = (x/z^k) x_{n-1} − (y/z^k) y_{n-1}`,
/// `y_n = (x/z^k) y_{n-1} + (y/z^k) x_{n-1}`. For `G′` the factor in front
/// of `y_{n-1}` in `x_n` is `y/z^{k+1}`, which keeps `φ*x_n = q^{2k} cos nθ`
/// and `φ*y_n = q^{2k+1} sin nθ`.
pub fn xy_recursion(m: &QuotientMap, n_max: usize) -> Result<Vec<(RatFn, RatFn)>> {
    if n_max < 1 {
        return usage("xy_recursion needs n_max >= 1");
    }
    let f = &m.target.f;
    let x = f.var_idx(0);
    let y = f.var_idx(1);
    let k = m.k;
    let a = ratfn(x.clone(), z_pow(f, k));
    let b_x = match m.group {
        Group::G => ratfn(y.clone(), z_pow(f, k)),
        Group::GPrime => ratfn(y.clone(), z_pow(f, k + 1)),
    };
    let b_y = ratfn(y.clone(), z_pow(f, k));
    let lex = MonomialOrder::lex(3);
    let mut out = vec![(RatFn::from_poly(x), RatFn::from_poly(y))];
    for _ in 1..n_max {
        let (xp, yp) = out.last().unwrap();
        let xn = a.mul(xp).sub(&b_x.mul(yp)).reduce_mod(f, &lex)?;
        let yn = a.mul(yp).add(&b_y.mul(xp)).reduce_mod(f, &lex)?;
        out.push((xn, yn));
    }
    Ok(out)
}

/// A rational function carried to one chart.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafLift {
    /// Agrees with a polynomial on the strict transform.
    Polynomial {
        #[serde(serialize_with = "crate::io::ser_poly")]
        value: Poly,
    },
    /// Not polynomial, but the denominator has no zero on the strict
    /// transform.
    Smooth {
        #[serde(serialize_with = "crate::io::ser_display")]
        value: RatFn,
    },
    /// The denominator may vanish on the strict transform.
    NotLiftable {
        #[serde(serialize_with = "crate::io::ser_display")]
        value: RatFn,
        reason: String,
    },
}

impl LeafLift {
    pub fn value(&self) -> RatFn {
        match self {
            LeafLift::Polynomial { value } => RatFn::from_poly(value.clone()),
            LeafLift::Smooth { value } | LeafLift::NotLiftable { value, .. } => value.clone(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        matches!(self, LeafLift::Polynomial { .. })
    }

    pub fn is_liftable(&self) -> bool {
        !matches!(self, LeafLift::NotLiftable { .. })
    }
}

/// Every term has even exponents and the sign of a nonzero constant term,
/// so `p` has no real zeros.
fn definite(p: &Poly) -> bool {
    let zero = vec![0u32; p.nvars()];
    let c0 = p.coeff(&zero);
    if num_traits::Zero::is_zero(&c0) {
        return false;
    }
    let pos = num_traits::Signed::is_positive(&c0);
    p.terms()
        .all(|(e, c)| e.iter().all(|v| v % 2 == 0) && num_traits::Signed::is_positive(c) == pos)
}

fn restrict_zero(p: &Poly, v: usize) -> Poly {
    let mut out = p.zero_like();
    for (e, c) in p.terms() {
        if e[v] == 0 {
            out = &out + &p.monomial_like(e.clone(), c.clone());
        }
    }
    out
}

/// Why `den` may vanish on `{strict = 0}`, or `None` when it cannot.
fn vanishing_reason(den: &Poly, strict: &Poly) -> Option<String> {
    if definite(den) {
        return None;
    }
    if den.num_terms() == 1 {
        let (e, _) = den.terms().next().unwrap();
        for (v, &p) in e.iter().enumerate() {
            if p > 0 && !definite(&restrict_zero(strict, v)) {
                return Some(format!(
                    "denominator {den} vanishes where {} = 0 on {strict} = 0",
                    den.vars()[v]
                ));
            }
        }
        return None;
    }
    Some(format!("denominator {den} is not certified nonvanishing on {strict} = 0"))
}

fn simplify(f: RatFn, strict: &Poly) -> RatFn {
    if f.den().is_constant() {
        return RatFn::from_poly(normal_form(
            &f.as_poly().expect("constant denominator"),
            strict,
            &MonomialOrder::lex(3),
        ));
    }
    match certified_quotient(f.num(), f.den(), strict) {
        Certified::Quotient(q) => RatFn::from_poly(q),
        _ => f
            .reduce_mod(strict, &MonomialOrder::lex(3))
            .expect("same variables"),
    }
}

/// Carries `f` (a function of the ambient coordinates) down the lineage of
/// chart `id`, clearing denominators modulo each strict transform on the way.
pub fn lift_to_chart(atlas: &ResolutionAtlas, id: &str, f: &RatFn) -> Result<LeafLift> {
    let chain = atlas.lineage(id)?;
    let mut cur = simplify(f.clone(), chain[0].strict());
    for c in chain.iter().skip(1) {
        let num = cur.num().compose(&c.substitution)?;
        let den = cur.den().compose(&c.substitution)?;
        cur = simplify(RatFn::new(num, den)?, c.strict());
    }
    let strict = chain.last().unwrap().strict();
    Ok(match cur.as_poly() {
        Some(p) => LeafLift::Polynomial { value: p },
        None => match vanishing_reason(cur.den(), strict) {
            None => LeafLift::Smooth { value: cur },
            Some(reason) => LeafLift::NotLiftable { value: cur, reason },
        },
    })
}

/// [`lift_to_chart`] on every leaf, in leaf order.
pub fn lift_rational(atlas: &ResolutionAtlas, f: &RatFn) -> Result<Vec<(String, LeafLift)>> {
    atlas
        .leaves
        .par_iter()
        .map(|id| Ok((id.clone(), lift_to_chart(atlas, id, f)?)))
        .collect()
}

/// Exact checks of the recursion on one leaf.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub leaf: String,
    pub n: usize,
    /// `X_n, Y_n` lift (polynomial or smooth).
    pub lifted: bool,
    pub polynomial: bool,
    /// The defining relation holds for `(X_n, Y_n, Z)` modulo the strict
    /// transform.
    pub relation: bool,
}

/// `φ*x_n`, `φ*y_n` against the closed forms, exactly.
pub fn pullback_identities(m: &QuotientMap, xy: &[(RatFn, RatFn)]) -> Result<Vec<bool>> {
    let k = m.k as i32;
    let (ax, ay) = match m.group {
        Group::G => (k, k),
        Group::GPrime => (2 * k, 2 * k + 1),
    };
    xy.iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let n = i as u32 + 1;
            let px = TrigPoly::eval_ratfn(x, &m.components)?;
            let py = TrigPoly::eval_ratfn(y, &m.components)?;
            Ok(px == TrigPoly::q_pow_cos(ax, n) && py == TrigPoly::q_pow_sin(ay, n))
        })
        .collect()
}

/// Lifts `x_n, y_n` for `n ≤ n_max` to every leaf and checks that the
/// target relation (`X² + Y² = Z^{2k}` or `Z X² + Y² = Z^{2k+1}`) holds
/// exactly modulo the leaf's strict transform.
pub fn recursion_identities(atlas: &ResolutionAtlas, m: &QuotientMap, n_max: usize) -> Result<Vec<IdentityRow>> {
    let xy = xy_recursion(m, n_max)?;
    let f = m.target.f.clone();
    let z = RatFn::from_poly(f.var_idx(2));
    let jobs: Vec<(String, usize)> = atlas
        .leaves
        .iter()
        .flat_map(|l| (1..=n_max).map(move |n| (l.clone(), n)))
        .collect();
    jobs.par_iter()
        .map(|(leaf, n)| {
            let (x, y) = &xy[n - 1];
            let lx = lift_to_chart(atlas, leaf, x)?;
            let ly = lift_to_chart(atlas, leaf, y)?;
            let lz = lift_to_chart(atlas, leaf, &z)?;
            let strict = atlas.chart(leaf)?.strict();
            let rel = relation_value(&f, &lx.value(), &ly.value(), &lz.value());
            let relation = normal_form(rel.num(), strict, &MonomialOrder::lex(3)).is_zero();
            Ok(IdentityRow {
                leaf: leaf.clone(),
                n: *n,
                lifted: lx.is_liftable() && ly.is_liftable(),
                polynomial: lx.is_polynomial() && ly.is_polynomial(),
                relation,
            })
        })
        .collect()
}

/// `f(x, y, z)` for rational arguments.
fn relation_value(f: &Poly, x: &RatFn, y: &RatFn, z: &RatFn) -> RatFn {
    let mut acc = RatFn::from_poly(x.num().zero_like());
    for (e, c) in f.terms() {
        let t = x
            .pow(e[0])
            .mul(&y.pow(e[1]))
            .mul(&z.pow(e[2]))
            .mul_poly(&x.num().constant_like(c.clone()));
        acc = acc.add(&t);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{resolve_a, resolve_d};
    use crate::lift::make_phi;
    use crate::poisson::XYZ;

    fn rf(n: &str, d: &str) -> RatFn {
        RatFn::new(Poly::parse(n, &XYZ).unwrap(), Poly::parse(d, &XYZ).unwrap()).unwrap()
    }

    #[test]
    fn recursion_pulls_back_to_multiple_angles() {
        for g in [Group::G, Group::GPrime] {
            let m = make_phi(g, 2).unwrap();
            let xy = xy_recursion(&m, 10).unwrap();
            assert!(pullback_identities(&m, &xy).unwrap().iter().all(|b| *b));
        }
        let m = make_phi(Group::G, 2).unwrap();
        let xy = xy_recursion(&m, 2).unwrap();
        assert_eq!(xy[1].0, rf("x^2 - y^2", "z^2").reduce_mod(&m.target.f, &MonomialOrder::lex(3)).unwrap());
    }

    #[test]
    fn final_leaf_lifts() {
        let a = resolve_a(2).unwrap();
        let last = a.z_chain().last().unwrap().id.clone();
        let got = lift_to_chart(&a, &last, &rf("x", "z^2")).unwrap();
        assert_eq!(got, LeafLift::Polynomial { value: Poly::parse("x", &XYZ).unwrap() });
        assert!(!lift_to_chart(&a, &last, &rf("x", "z^3")).unwrap().is_liftable());
        for (_, l) in lift_rational(&a, &rf("z", "1")).unwrap() {
            assert!(l.is_polynomial());
        }
        let side = lift_to_chart(&a, "root/x", &rf("x", "z^2")).unwrap();
        assert!(matches!(side, LeafLift::Smooth { .. }), "{side:?}");
    }

    #[test]
    fn relation_on_every_leaf() {
        let a = resolve_a(2).unwrap();
        let m = make_phi(Group::G, 2).unwrap();
        let rows = recursion_identities(&a, &m, 4).unwrap();
        assert!(rows.iter().all(|r| r.relation && r.lifted), "{rows:?}");
        let d = resolve_d(2).unwrap();
        let m = make_phi(Group::GPrime, 2).unwrap();
        let rows = recursion_identities(&d, &m, 3).unwrap();
        assert!(rows.iter().all(|r| r.relation), "{rows:?}");
    }
}
