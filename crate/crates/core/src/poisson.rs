//! Poisson structures on surfaces `{F = 0}` in ℝ³.
//!
//! A bracket is stored through its three upper-triangle entries
//! `{x,y}`, `{y,z}`, `{z,x}`. [`pichereau_from`] fills them from the
//! partials of `F`, which makes `F` a Casimir:
//!
//! ```
//! use duval::poly::Poly;
//! use duval::poisson::{jacobi_check, pichereau_from};
//!
//! let f = Poly::parse("x^2 + y^2 - z^4", &["x", "y", "z"]).unwrap();
//! let s = pichereau_from(&f).unwrap();
//! assert_eq!(s.b_xy.to_string(), "-4*z^3");
//! assert!(jacobi_check(&s).is_zero);
//! ```

use rand::Rng;
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::poly::{normal_form, MonomialOrder, Poly, RatFn};

pub const XYZ: [&str; 3] = ["x", "y", "z"];

/// Surface `{f = 0}` with a bracket on the ambient coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoissonSurface {
    pub f: Poly,
    pub b_xy: Poly,
    pub b_yz: Poly,
    pub b_zx: Poly,
}

impl PoissonSurface {
    pub fn new(f: Poly, b_xy: Poly, b_yz: Poly, b_zx: Poly) -> Result<PoissonSurface> {
        check_xyz(&f)?;
        for b in [&b_xy, &b_yz, &b_zx] {
            f.same_vars(b)?;
        }
        Ok(PoissonSurface { f, b_xy, b_yz, b_zx })
    }

    /// Bracket of coordinate functions `i` and `j`.
    pub fn entry(&self, i: usize, j: usize) -> Poly {
        match (i, j) {
            (0, 1) => self.b_xy.clone(),
            (1, 2) => self.b_yz.clone(),
            (2, 0) => self.b_zx.clone(),
            (1, 0) => -&self.b_xy,
            (2, 1) => -&self.b_yz,
            (0, 2) => -&self.b_zx,
            _ => self.f.zero_like(),
        }
    }

    /// The vector `P = ({y,z}, {z,x}, {x,y})`, so that `{f,g} = P·(∇f × ∇g)`.
    pub fn p_vector(&self) -> [&Poly; 3] {
        [&self.b_yz, &self.b_zx, &self.b_xy]
    }

    /// Bracket of two polynomials, not reduced.
    pub fn poly_bracket(&self, f: &Poly, g: &Poly) -> Poly {
        let df = f.gradient();
        let dg = g.gradient();
        let cross = [
            &(&df[1] * &dg[2]) - &(&df[2] * &dg[1]),
            &(&df[2] * &dg[0]) - &(&df[0] * &dg[2]),
            &(&df[0] * &dg[1]) - &(&df[1] * &dg[0]),
        ];
        let p = self.p_vector();
        &(&(p[0] * &cross[0]) + &(p[1] * &cross[1])) + &(p[2] * &cross[2])
    }

    /// Normal form modulo `f` in the default lex order.
    pub fn reduce(&self, g: &Poly) -> Poly {
        normal_form(g, &self.f, &MonomialOrder::lex(3))
    }

    /// Euclidean norm of `P` at a point.
    pub fn p_norm_at(&self, x: &[f64; 3]) -> f64 {
        self.p_vector()
            .iter()
            .map(|b| b.eval_f64(x).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_xyz(f: &Poly) -> Result<()> {
    if f.vars() != XYZ {
        return usage(format!(
            "expected a polynomial in (x, y, z), got variables {:?}",
            f.vars()
        ));
    }
    Ok(())
}

/// The bracket `{x,y} = ∂F/∂z`, `{y,z} = ∂F/∂x`, `{z,x} = ∂F/∂y`.
pub fn pichereau_from(f: &Poly) -> Result<PoissonSurface> {
    check_xyz(f)?;
    PoissonSurface::new(
        f.clone(),
        f.partial_idx(2),
        f.partial_idx(0),
        f.partial_idx(1),
    )
}

/// `{f, g}` by Leibniz from the generator brackets, reduced modulo `F`.
pub fn bracket_of(s: &PoissonSurface, f: &RatFn, g: &RatFn) -> Result<RatFn> {
    for h in [f, g] {
        if s.reduce(h.den()).is_zero() {
            return Err(Error::Domain(format!(
                "denominator {} vanishes identically on the surface",
                h.den()
            )));
        }
    }
    let df: Vec<RatFn> = (0..3).map(|i| f.partial_idx(i)).collect();
    let dg: Vec<RatFn> = (0..3).map(|i| g.partial_idx(i)).collect();
    let mut acc = RatFn::from_poly(s.f.zero_like());
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let e = s.entry(i, j);
        if e.is_zero() {
            continue;
        }
        let w = df[i].mul(&dg[j]).sub(&df[j].mul(&dg[i]));
        acc = acc.add(&w.mul_poly(&e));
    }
    acc.reduce_mod(&s.f, &MonomialOrder::lex(3))
}

/// Result of the symbolic Jacobi check.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiReport {
    #[serde(serialize_with = "crate::io::ser_poly")]
    pub residual: Poly,
    pub is_zero: bool,
}

/// Reduces `{x,{y,z}} + {y,{z,x}} + {z,{x,y}}` modulo `F`.
pub fn jacobi_check(s: &PoissonSurface) -> JacobiReport {
    let c: Vec<Poly> = (0..3).map(|i| s.f.var_idx(i)).collect();
    let sum = &(&s.poly_bracket(&c[0], &s.b_yz) + &s.poly_bracket(&c[1], &s.b_zx))
        + &s.poly_bracket(&c[2], &s.b_xy);
    let residual = s.reduce(&sum);
    JacobiReport {
        is_zero: residual.is_zero(),
        residual,
    }
}

/// Result of checking that `F` is a Casimir.
#[derive(Clone, Debug, Serialize)]
pub struct CasimirReport {
    #[serde(serialize_with = "crate::io::ser_polys")]
    pub residuals: Vec<Poly>,
    pub is_zero: bool,
}

/// Reduces `{F, x}`, `{F, y}`, `{F, z}` modulo `F`.
pub fn casimir_check(s: &PoissonSurface) -> CasimirReport {
    let residuals: Vec<Poly> = (0..3)
        .map(|i| s.reduce(&s.poly_bracket(&s.f, &s.f.var_idx(i))))
        .collect();
    CasimirReport {
        is_zero: residuals.iter().all(Poly::is_zero),
        residuals,
    }
}

/// Values of a local-coordinate bracket `{c1, c2}` over sample points.
#[derive(Clone, Debug, Serialize)]
pub struct NondegeneracyReport {
    #[serde(serialize_with = "crate::io::ser_display")]
    pub bracket: RatFn,
    pub evaluated: usize,
    pub skipped: usize,
    pub min_abs: f64,
    pub zero_hits: Vec<[f64; 3]>,
}

impl NondegeneracyReport {
    pub fn nondegenerate(&self) -> bool {
        self.evaluated > 0 && self.zero_hits.is_empty()
    }
}

/// Evaluates `{c1, c2}` on sample points of the surface.
pub fn nondegeneracy_on_chart(
    s: &PoissonSurface,
    chart_coords: (&RatFn, &RatFn),
    points: &[[f64; 3]],
) -> Result<NondegeneracyReport> {
    let b = bracket_of(s, chart_coords.0, chart_coords.1)?;
    let num = b.num().compile();
    let den = b.den().compile();
    let mut rep = NondegeneracyReport {
        bracket: b,
        evaluated: 0,
        skipped: 0,
        min_abs: f64::INFINITY,
        zero_hits: Vec::new(),
    };
    for x in points {
        let d = den.eval(x);
        if d.abs() < 1e-12 {
            log::debug!("denominator vanishes at {x:?}; point skipped");
            rep.skipped += 1;
            continue;
        }
        let v = (num.eval(x) / d).abs();
        rep.evaluated += 1;
        rep.min_abs = rep.min_abs.min(v);
        if v < 1e-12 {
            rep.zero_hits.push(*x);
        }
    }
    Ok(rep)
}

/// Points on `x² + y² = z^{2k}` via `x = r^k cos t, y = r^k sin t, z = r`.
pub fn sample_a_surface<R: Rng>(k: u32, r_max: f64, n: usize, rng: &mut R) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let r = rng.gen_range(-r_max..=r_max);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            let rk = r.powi(k as i32);
            [rk * t.cos(), rk * t.sin(), r]
        })
        .collect()
}

/// Points on `z x² + y² = z^{2k+1}` with `0 < z ≤ z_max`, solving for `y`.
pub fn sample_d_surface<R: Rng>(k: u32, z_max: f64, n: usize, rng: &mut R) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.gen_range(0.0..=z_max);
            let zk = z.powi(k as i32);
            let x = rng.gen_range(-zk..=zk);
            let y2 = (z.powi(2 * k as i32 + 1) - z * x * x).max(0.0);
            let y = if rng.gen_bool(0.5) { y2.sqrt() } else { -y2.sqrt() };
            [x, y, z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> Poly {
        Poly::parse(s, &XYZ).unwrap()
    }

    fn r(n: &str, d: &str) -> RatFn {
        RatFn::new(p(n), p(d)).unwrap()
    }

    #[test]
    fn pichereau_examples() {
        let a = pichereau_from(&p("x^2 + y^2 - z^4")).unwrap();
        assert_eq!((a.b_xy.clone(), a.b_yz.clone(), a.b_zx.clone()), (p("-4*z^3"), p("2*x"), p("2*y")));
        let d = pichereau_from(&p("z*x^2 + y^2 - z^5")).unwrap();
        assert_eq!((d.b_xy, d.b_yz, d.b_zx), (p("x^2 - 5*z^4"), p("2*z*x"), p("2*y")));
        let c = pichereau_from(&p("3")).unwrap();
        assert!(c.b_xy.is_zero() && c.b_yz.is_zero() && c.b_zx.is_zero());
        let uv = Poly::parse("u + v", &["u", "v", "w"]).unwrap();
        assert!(matches!(pichereau_from(&uv), Err(Error::Usage(_))));
    }

    #[test]
    fn bracket_of_examples() {
        let s = pichereau_from(&p("x^2 + y^2 - z^4")).unwrap();
        let b = bracket_of(&s, &r("x", "z"), &r("y", "z")).unwrap();
        assert_eq!(b, r("-2*z", "1"));
        let f = r("x*y + z", "z^2");
        assert!(bracket_of(&s, &f, &f).unwrap().is_zero());
        let big_f = RatFn::from_poly(s.f.clone());
        assert!(bracket_of(&s, &big_f, &r("x", "1")).unwrap().is_zero());
        let bad = r("1", "x^2 + y^2 - z^4");
        assert!(matches!(bracket_of(&s, &bad, &f), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobi_examples() {
        for f in ["x^2 + y^2 - z^4", "z*x^2 + y^2 - z^5"] {
            let s = pichereau_from(&p(f)).unwrap();
            assert!(jacobi_check(&s).is_zero);
            assert!(casimir_check(&s).is_zero);
        }
        let zero = PoissonSurface::new(p("x"), p("0"), p("0"), p("0")).unwrap();
        assert!(jacobi_check(&zero).is_zero);
    }

    #[test]
    fn nondegeneracy_examples() {
        let leaf = PoissonSurface::new(p("x^2 + y^2 - 1"), p("0"), p("2*x"), p("2*y")).unwrap();
        let pts: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let t = -1.2 + 2.4 * i as f64 / 49.0;
                [t.cos(), t.sin(), 0.1 * i as f64 - 2.0]
            })
            .collect();
        let rep = nondegeneracy_on_chart(&leaf, (&r("y", "1"), &r("z", "1")), &pts).unwrap();
        assert!(rep.nondegenerate());
        assert!(rep.min_abs > 0.7);

        let a4 = pichereau_from(&p("x^2 + y^2 - z^4")).unwrap();
        let rep = nondegeneracy_on_chart(&a4, (&r("x", "1"), &r("y", "1")), &[[0.0; 3]]).unwrap();
        assert_eq!(rep.zero_hits.len(), 1);

        let d0 = pichereau_from(&p("z*x^2 + y^2 - z")).unwrap();
        assert_eq!(d0.p_norm_at(&[1.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn samplers_land_on_surfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in sample_a_surface(3, 1.5, 100, &mut rng) {
            assert!((x[0].powi(2) + x[1].powi(2) - x[2].powi(6)).abs() < 1e-10);
        }
        for x in sample_d_surface(2, 1.5, 100, &mut rng) {
            assert!(x[2] >= 0.0);
            assert!((x[2] * x[0].powi(2) + x[1].powi(2) - x[2].powi(5)).abs() < 1e-10);
        }
    }
}
