//! Point blow-ups of surfaces in affine charts.
//!
//! Every chart is written in coordinates named `x, y, z`. A child chart of a
//! blow-up at `c` expresses its parent's coordinates as
//!
//! | kind | parent `(x, y, z)` |
//! |------|--------------------|
//! | `x`  | `c + (x, y·x, z·x)` |
//! | `y`  | `c + (x·y, y, z·y)` |
//! | `z`  | `c + (x·z, y·z, z)` |
//!
//! and owns the part of the exceptional directions where its exceptional
//! coordinate dominates, so that the three children partition the parent.

mod json;
mod pipeline;
mod sample;
mod singular;

use std::collections::HashMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{usage, Error, Result};
use crate::poisson::{casimir_check, jacobi_check, PoissonSurface, XYZ};
use crate::poly::{
    certified_quotient, int, normal_form, rat_to_f64, Certified, MonomialOrder, Poly, Rat,
};

pub use json::AtlasFile;
pub use pipeline::{resolve_a, resolve_d, singular_in_domain};
pub use sample::{sample_chart_points, SampleOptions};
pub use singular::{singular_points, SearchBox, SingularPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Root,
    X,
    Y,
    Z,
}

impl ChartKind {
    /// Index of the exceptional coordinate.
    pub fn exceptional(self) -> Option<usize> {
        match self {
            ChartKind::Root => None,
            ChartKind::X => Some(0),
            ChartKind::Y => Some(1),
            ChartKind::Z => Some(2),
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            ChartKind::Root => "root",
            ChartKind::X => "x",
            ChartKind::Y => "y",
            ChartKind::Z => "z",
        }
    }

    fn parse(s: &str) -> Result<ChartKind> {
        Ok(match s {
            "root" => ChartKind::Root,
            "x" => ChartKind::X,
            "y" => ChartKind::Y,
            "z" => ChartKind::Z,
            _ => return usage(format!("unknown chart kind `{s}`")),
        })
    }
}

/// `|coord| ≤ 1`, or `|coord| < 1` when `strict`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bound {
    pub coord: usize,
    pub strict: bool,
}

impl Bound {
    fn holds_exact(&self, p: &[Rat; 3]) -> bool {
        let a = p[self.coord].abs();
        let one = int(1);
        if self.strict {
            a < one
        } else {
            a <= one
        }
    }

    fn holds(&self, p: &[f64; 3], tol: f64) -> bool {
        let a = p[self.coord].abs();
        if self.strict {
            a < 1.0 + tol
        } else {
            a <= 1.0 + tol
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.strict { "<" } else { "<=" };
        write!(f, "|{}| {} 1", XYZ[self.coord], op)
    }
}

impl std::str::FromStr for Bound {
    type Err = Error;
    fn from_str(s: &str) -> Result<Bound> {
        let bad = || Error::Usage(format!("bad domain bound `{s}`"));
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 3 || parts[2] != "1" {
            return Err(bad());
        }
        let name = parts[0]
            .strip_prefix('|')
            .and_then(|r| r.strip_suffix('|'))
            .ok_or_else(bad)?;
        let coord = XYZ.iter().position(|v| *v == name).ok_or_else(bad)?;
        let strict = match parts[1] {
            "<" => true,
            "<=" => false,
            _ => return Err(bad()),
        };
        Ok(Bound { coord, strict })
    }
}

/// One affine chart of an iterated blow-up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub id: String,
    pub parent: Option<String>,
    pub kind: ChartKind,
    /// Blow-up center in parent coordinates.
    pub center: [Rat; 3],
    /// Parent coordinates as polynomials in this chart's coordinates.
    pub substitution: [Poly; 3],
    pub exceptional_mult: u32,
    /// `g` with bracket `= g·{·,·}_S`, where `{x,y} = ∂_z S` and cyclically.
    pub multiplier: Poly,
    /// Strict transform with its transported bracket.
    pub surface: PoissonSurface,
    /// This chart's own share of the parent's exceptional directions.
    pub domain: Vec<Bound>,
}

impl Chart {
    pub fn root(id: &str, surface: PoissonSurface) -> Chart {
        let vars: Vec<Poly> = (0..3).map(|i| surface.f.var_idx(i)).collect();
        Chart {
            id: id.to_string(),
            parent: None,
            kind: ChartKind::Root,
            center: [int(0), int(0), int(0)],
            substitution: [vars[0].clone(), vars[1].clone(), vars[2].clone()],
            exceptional_mult: 0,
            multiplier: surface.f.one_like(),
            surface,
            domain: Vec::new(),
        }
    }

    pub fn strict(&self) -> &Poly {
        &self.surface.f
    }

    /// Box used for singular-point searches: `[-r, r]³` cut by the bounds.
    pub fn search_box(&self, r: f64) -> SearchBox {
        let mut b = SearchBox::cube(r);
        for bd in &self.domain {
            b.lo[bd.coord] = b.lo[bd.coord].max(-1.0);
            b.hi[bd.coord] = b.hi[bd.coord].min(1.0);
        }
        b
    }

    /// Maps a chart point to parent coordinates.
    pub fn to_parent(&self, p: &[f64; 3]) -> [f64; 3] {
        let s = &self.substitution;
        [s[0].eval_f64(p), s[1].eval_f64(p), s[2].eval_f64(p)]
    }

    pub fn to_parent_exact(&self, p: &[Rat; 3]) -> [Rat; 3] {
        let s = &self.substitution;
        [s[0].eval_exact(p), s[1].eval_exact(p), s[2].eval_exact(p)]
    }

    /// Inverse of [`Chart::to_parent`] off the exceptional divisor.
    pub fn from_parent(&self, p: &[f64; 3]) -> Option<[f64; 3]> {
        let c: Vec<f64> = self.center.iter().map(rat_to_f64).collect();
        let t = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
        let out = match self.kind {
            ChartKind::Root => *p,
            ChartKind::X => [t[0], t[1] / t[0], t[2] / t[0]],
            ChartKind::Y => [t[0] / t[1], t[1], t[2] / t[1]],
            ChartKind::Z => [t[0] / t[2], t[1] / t[2], t[2]],
        };
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Which defining polynomial an atlas resolves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    A,
    D,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::A => "A",
            Family::D => "D",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        match s {
            "A" | "a" => Ok(Family::A),
            "D" | "d" => Ok(Family::D),
            _ => usage(format!("unknown family `{s}` (expected A or D)")),
        }
    }
}

impl Family {
    /// `x² + y² − z^{2k}` or `z x² + y² − z^{2k+1}`.
    pub fn defining_poly(self, k: u32) -> Poly {
        let src = match self {
            Family::A => format!("x^2 + y^2 - z^{}", 2 * k),
            Family::D => format!("z*x^2 + y^2 - z^{}", 2 * k + 1),
        };
        Poly::parse(&src, &XYZ).expect("static grammar")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlowupRecord {
    pub chart: String,
    pub center: [Rat; 3],
}

/// Tree of charts produced by iterated blow-ups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionAtlas {
    pub family: Family,
    pub k: u32,
    pub charts: Vec<Chart>,
    pub leaves: Vec<String>,
    pub history: Vec<BlowupRecord>,
    /// Sampling is restricted to ambient `z ≥ 0` when set.
    pub half_space: bool,
    index: HashMap<String, usize>,
}

impl ResolutionAtlas {
    pub fn new(family: Family, k: u32, root: Chart, half_space: bool) -> Self {
        let mut a = ResolutionAtlas {
            family,
            k,
            charts: Vec::new(),
            leaves: Vec::new(),
            history: Vec::new(),
            half_space,
            index: HashMap::new(),
        };
        a.push(root);
        a
    }

    pub(crate) fn push(&mut self, c: Chart) {
        self.index.insert(c.id.clone(), self.charts.len());
        self.charts.push(c);
    }

    pub fn root(&self) -> &Chart {
        &self.charts[0]
    }

    pub fn chart(&self, id: &str) -> Result<&Chart> {
        self.index
            .get(id)
            .map(|&i| &self.charts[i])
            .ok_or_else(|| Error::Usage(format!("no chart `{id}`")))
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Chart> + 'a {
        self.charts
            .iter()
            .filter(move |c| c.parent.as_deref() == Some(id))
    }

    /// Charts from the root down to `id`.
    pub fn lineage(&self, id: &str) -> Result<Vec<&Chart>> {
        let mut out = vec![self.chart(id)?];
        while let Some(p) = &out.last().unwrap().parent {
            out.push(self.chart(p)?);
        }
        out.reverse();
        Ok(out)
    }

    /// Leaf charts in creation order.
    pub fn leaf_charts(&self) -> Vec<&Chart> {
        self.leaves
            .iter()
            .map(|id| self.chart(id).expect("leaf ids are valid"))
            .collect()
    }

    /// Ambient `(x, y, z)` as polynomials in the coordinates of `id`.
    pub fn composite_map(&self, id: &str) -> Result<[Poly; 3]> {
        let chain = self.lineage(id)?;
        let leaf = chain.last().unwrap();
        let mut cur: Vec<Poly> = (0..3).map(|i| leaf.strict().var_idx(i)).collect();
        for c in chain.iter().skip(1).rev() {
            cur = c
                .substitution
                .iter()
                .map(|s| s.compose(&cur))
                .collect::<Result<_>>()?;
        }
        Ok([cur[0].clone(), cur[1].clone(), cur[2].clone()])
    }

    /// Maps a point of chart `id` to the ambient space.
    pub fn to_ambient(&self, id: &str, p: &[f64; 3]) -> Result<[f64; 3]> {
        let mut c = self.chart(id)?;
        let mut pt = *p;
        while let Some(parent) = &c.parent {
            pt = c.to_parent(&pt);
            c = self.chart(parent)?;
        }
        Ok(pt)
    }

    /// Coordinates in chart `id` of an ambient point, when it is off the
    /// exceptional loci along the way.
    pub fn from_ambient(&self, id: &str, p: &[f64; 3]) -> Result<Option<[f64; 3]>> {
        let mut pt = *p;
        for c in self.lineage(id)?.into_iter().skip(1) {
            match c.from_parent(&pt) {
                Some(q) => pt = q,
                None => return Ok(None),
            }
        }
        Ok(Some(pt))
    }

    /// Whether a chart point lies in the chart's share of the space, checking
    /// every ancestor's bounds.
    pub fn in_domain(&self, id: &str, p: &[f64; 3], tol: f64) -> Result<bool> {
        let mut c = self.chart(id)?;
        let mut pt = *p;
        loop {
            if !c.domain.iter().all(|b| b.holds(&pt, tol)) {
                return Ok(false);
            }
            let Some(parent) = &c.parent else {
                return Ok(true);
            };
            pt = c.to_parent(&pt);
            c = self.chart(parent)?;
        }
    }

    pub fn in_domain_exact(&self, id: &str, p: &[Rat; 3]) -> Result<bool> {
        let mut c = self.chart(id)?;
        let mut pt = p.clone();
        loop {
            if !c.domain.iter().all(|b| b.holds_exact(&pt)) {
                return Ok(false);
            }
            let Some(parent) = &c.parent else {
                return Ok(true);
            };
            pt = c.to_parent_exact(&pt);
            c = self.chart(parent)?;
        }
    }

    /// Number of blow-ups performed.
    pub fn blowup_count(&self) -> usize {
        self.history.len()
    }

    /// Chart ids along the chain of `z`-charts from the root.
    pub fn z_chain(&self) -> Vec<&Chart> {
        let mut out = vec![self.root()];
        loop {
            let last = out.last().unwrap().id.clone();
            let next = self
                .charts
                .iter()
                .find(|c| c.parent.as_deref() == Some(last.as_str()) && c.kind == ChartKind::Z && c.center.iter().all(Zero::is_zero));
            match next {
                Some(c) => out.push(c),
                None => return out,
            }
        }
    }

    /// Blows up chart `id` at `center`, records the three children and
    /// returns their ids.
    pub fn blow_up_chart(&mut self, id: &str, center: [Rat; 3]) -> Result<Vec<String>> {
        let children = blow_up(self.chart(id)?, &center)?;
        self.history.push(BlowupRecord {
            chart: id.to_string(),
            center,
        });
        let ids = children.iter().map(|c| c.id.clone()).collect();
        for c in children {
            self.push(c);
        }
        Ok(ids)
    }

    pub(crate) fn recompute_leaves(&mut self) {
        let parents: std::collections::HashSet<&str> =
            self.charts.iter().filter_map(|c| c.parent.as_deref()).collect();
        self.leaves = self
            .charts
            .iter()
            .filter(|c| !parents.contains(c.id.as_str()))
            .map(|c| c.id.clone())
            .collect();
    }
}

fn child_id(parent: &str, kind: ChartKind, center: &[Rat; 3]) -> String {
    if center.iter().all(Zero::is_zero) {
        format!("{parent}/{}", kind.letter())
    } else {
        format!(
            "{parent}/{}@{},{},{}",
            kind.letter(),
            center[0],
            center[1],
            center[2]
        )
    }
}

/// Blows up `c` at a singular point of its strict transform.
pub fn blow_up(c: &Chart, center: &[Rat; 3]) -> Result<Vec<Chart>> {
    let s = c.strict();
    let on_surface = s.eval_exact(center).is_zero();
    let singular = s.gradient().iter().all(|g| g.eval_exact(center).is_zero());
    if !on_surface || !singular {
        return usage(format!(
            "center ({}, {}, {}) is not a singular point of {} in chart {}",
            center[0], center[1], center[2], s, c.id
        ));
    }
    let v: Vec<Poly> = (0..3).map(|i| s.var_idx(i)).collect();
    let k: Vec<Poly> = center.iter().map(|r| s.constant_like(r.clone())).collect();
    let mut out = Vec::with_capacity(3);
    for kind in [ChartKind::X, ChartKind::Y, ChartKind::Z] {
        let e = kind.exceptional().unwrap();
        let subst: Vec<Poly> = (0..3)
            .map(|i| if i == e { &k[i] + &v[i] } else { &k[i] + &(&v[i] * &v[e]) })
            .collect();
        let subst = [subst[0].clone(), subst[1].clone(), subst[2].clone()];
        let total = s.compose(&subst)?;
        let (mult, strict) = total.exceptional_multiplicity(XYZ[e])?;
        let multiplier = if mult >= 2 {
            &c.multiplier.compose(&subst)? * &v[e].pow(mult - 2)
        } else {
            strict.zero_like()
        };
        let candidate = jacobian_bracket(&strict, &multiplier);
        let surface = pullback_bracket(&c.surface, &subst, &strict, Some(&candidate))?;
        let id = child_id(&c.id, kind, center);
        let jac = jacobi_check(&surface);
        let cas = casimir_check(&surface);
        if !jac.is_zero || !cas.is_zero {
            return Err(Error::Structural(format!(
                "chart {id}: transported bracket fails Jacobi ({}) or Casimir ({:?})",
                jac.residual,
                cas.residuals.iter().map(|r| r.to_string()).collect::<Vec<_>>()
            )));
        }
        let domain = match kind {
            ChartKind::Z => vec![Bound { coord: 0, strict: false }, Bound { coord: 1, strict: false }],
            ChartKind::X => vec![Bound { coord: 1, strict: false }, Bound { coord: 2, strict: true }],
            ChartKind::Y => vec![Bound { coord: 0, strict: true }, Bound { coord: 2, strict: true }],
            ChartKind::Root => unreachable!(),
        };
        out.push(Chart {
            id,
            parent: Some(c.id.clone()),
            kind,
            center: center.clone(),
            substitution: subst,
            exceptional_mult: mult,
            multiplier,
            surface,
            domain,
        });
    }
    Ok(out)
}

fn det3(m: &[[Poly; 3]; 3]) -> Poly {
    let t = |a: usize, b: usize, c: usize| &(&m[0][a] * &m[1][b]) * &m[2][c];
    let pos = &(&t(0, 1, 2) + &t(1, 2, 0)) + &t(2, 0, 1);
    let neg = &(&t(2, 1, 0) + &t(0, 2, 1)) + &t(1, 0, 2);
    &pos - &neg
}

fn adjugate(m: &[[Poly; 3]; 3]) -> [[Poly; 3]; 3] {
    let cof = |i: usize, j: usize| {
        let r: Vec<usize> = (0..3).filter(|&r| r != i).collect();
        let c: Vec<usize> = (0..3).filter(|&c| c != j).collect();
        let minor = &(&m[r[0]][c[0]] * &m[r[1]][c[1]]) - &(&m[r[0]][c[1]] * &m[r[1]][c[0]]);
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    };
    // adj[i][j] = cofactor(j, i)
    std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i)))
}

/// Entries `g·(∂_z S, ∂_x S, ∂_y S)` reduced modulo `S`.
pub fn jacobian_bracket(s: &Poly, g: &Poly) -> [Poly; 3] {
    let lex = MonomialOrder::lex(3);
    let d = s.gradient();
    [&d[2] * g, &d[0] * g, &d[1] * g].map(|e| normal_form(&e, s, &lex))
}

/// Transports a bracket along `parent = substitution(chart)`.
///
/// With `J` the Jacobian of the substitution, the chart bivector is
/// `J⁻¹ Π J⁻ᵀ = adj(J) Π adj(J)ᵀ / det(J)²`; each entry must reduce to a
/// polynomial modulo the strict transform. When no monomial order separates
/// the strict transform from `det(J)²`, a `candidate` is accepted if
/// `candidate·det(J)² ≡ entry` modulo the strict transform.
pub fn pullback_bracket(
    parent: &PoissonSurface,
    substitution: &[Poly; 3],
    strict: &Poly,
    candidate: Option<&[Poly; 3]>,
) -> Result<PoissonSurface> {
    let jac: [[Poly; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| substitution[i].partial_idx(j)));
    let det = det3(&jac);
    let adj = adjugate(&jac);
    let pi: [[Poly; 3]; 3] = std::array::from_fn(|a| {
        std::array::from_fn(|b| parent.entry(a, b).compose(substitution).expect("xyz"))
    });
    // M = adj · Π · adjᵀ
    let mut ap: [[Poly; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| strict.zero_like()));
    for i in 0..3 {
        for b in 0..3 {
            for a in 0..3 {
                if !pi[a][b].is_zero() && !adj[i][a].is_zero() {
                    ap[i][b] = &ap[i][b] + &(&adj[i][a] * &pi[a][b]);
                }
            }
        }
    }
    let entry = |i: usize, j: usize| -> Poly {
        let mut m = strict.zero_like();
        for b in 0..3 {
            if !ap[i][b].is_zero() && !adj[j][b].is_zero() {
                m = &m + &(&ap[i][b] * &adj[j][b]);
            }
        }
        m
    };
    let det2 = &det * &det;
    let mut out = Vec::with_capacity(3);
    let lex = MonomialOrder::lex(3);
    for (n, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        let m = entry(i, j);
        match certified_quotient(&m, &det2, strict) {
            Certified::Quotient(q) => out.push(q),
            Certified::Undecided
                if candidate.is_some_and(|c| {
                    normal_form(&(&m - &(&c[n] * &det2)), strict, &lex).is_zero()
                }) =>
            {
                out.push(candidate.unwrap()[n].clone())
            }
            other => {
                return Err(Error::Structural(format!(
                    "bracket entry ({}, {}) does not descend to a polynomial on {}: {:?}",
                    XYZ[i], XYZ[j], strict, other
                )))
            }
        }
    }
    PoissonSurface::new(strict.clone(), out[0].clone(), out[1].clone(), out[2].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::pichereau_from;

    fn p(s: &str) -> Poly {
        Poly::parse(s, &XYZ).unwrap()
    }

    fn origin() -> [Rat; 3] {
        [int(0), int(0), int(0)]
    }

    fn root(f: &str) -> Chart {
        Chart::root("root", pichereau_from(&p(f)).unwrap())
    }

    #[test]
    fn a4_z_chart() {
        let kids = blow_up(&root("x^2 + y^2 - z^4"), &origin()).unwrap();
        let z = &kids[2];
        assert_eq!(z.id, "root/z");
        assert_eq!(z.exceptional_mult, 2);
        assert_eq!(z.strict(), &p("x^2 + y^2 - z^2"));
        assert_eq!(z.surface.b_xy, p("-2*z"));
        assert_eq!(z.surface.b_yz, p("2*x"));
        assert_eq!(z.surface.b_zx, p("2*y"));
    }

    #[test]
    fn a2_z_chart_is_smooth_leaf() {
        let kids = blow_up(&root("x^2 + y^2 - z^2"), &origin()).unwrap();
        let z = &kids[2];
        assert_eq!(z.strict(), &p("x^2 + y^2 - 1"));
        assert!(z.surface.b_xy.is_zero());
        assert_eq!(z.surface.b_yz, p("2*x"));
        assert_eq!(z.surface.b_zx, p("2*y"));
    }

    #[test]
    fn d5_x_chart() {
        let kids = blow_up(&root("z*x^2 + y^2 - z^5"), &origin()).unwrap();
        let x = &kids[0];
        assert_eq!(x.strict(), &p("z*x + y^2 - z^5*x^3"));
    }

    #[test]
    fn smooth_center_is_rejected() {
        let c = root("x^2 + y^2 - z^4");
        assert!(matches!(blow_up(&c, &[int(1), int(0), int(1)]), Err(Error::Usage(_))));
    }

    #[test]
    fn translated_center() {
        let c = root("z*x^2 + y^2 - z");
        let kids = blow_up(&c, &[int(1), int(0), int(0)]).unwrap();
        assert_eq!(kids[0].id, "root/x@1,0,0");
        assert_eq!(kids[0].strict(), &p("z*x + y^2 + 2*z"));
        for k in &kids {
            assert!(jacobi_check(&k.surface).is_zero);
        }
    }

    #[test]
    fn bound_text_roundtrip() {
        for b in [Bound { coord: 1, strict: true }, Bound { coord: 2, strict: false }] {
            assert_eq!(b.to_string().parse::<Bound>().unwrap(), b);
        }
    }
}
