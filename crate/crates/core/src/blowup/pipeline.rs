use log::{debug, info};

use super::{Chart, ChartKind, Family, ResolutionAtlas, SingularPoint};
use crate::error::{usage, Error, Result};
use crate::poisson::pichereau_from;
use crate::poly::{int, Poly, Rat};

/// Half-width of the box searched for singular points in every chart.
const SEARCH_RADIUS: f64 = 4.0;

/// Singular points of a chart's strict transform that lie in its share of
/// the space. Points that could not be certified exactly are reported as a
/// structural error.
pub fn singular_in_domain(atlas: &ResolutionAtlas, id: &str) -> Result<Vec<[Rat; 3]>> {
    let c = atlas.chart(id)?;
    let found = super::singular_points(c.strict(), &c.search_box(SEARCH_RADIUS));
    let mut out = Vec::new();
    for SingularPoint { approx, exact } in found {
        let Some(e) = exact else {
            return Err(Error::Structural(format!(
                "chart {id}: singular point near ({:.6e}, {:.6e}, {:.6e}) of {} is not rational",
                approx[0],
                approx[1],
                approx[2],
                c.strict()
            )));
        };
        if atlas.in_domain_exact(id, &e)? {
            out.push(e);
        }
    }
    debug!("chart {id}: {} singular point(s) in domain", out.len());
    Ok(out)
}

fn origin() -> [Rat; 3] {
    [int(0), int(0), int(0)]
}

fn fmt_points(pts: &[[Rat; 3]]) -> String {
    let s: Vec<String> = pts
        .iter()
        .map(|p| format!("({}, {}, {})", p[0], p[1], p[2]))
        .collect();
    format!("[{}]", s.join(", "))
}

fn unexpected(atlas: &ResolutionAtlas, id: &str, expected: &str, got: &[[Rat; 3]]) -> Error {
    let strict = atlas
        .chart(id)
        .map(|c| c.strict().to_string())
        .unwrap_or_default();
    Error::Structural(format!(
        "chart {id} (strict transform {strict}): expected {expected}, found singular points {}",
        fmt_points(got)
    ))
}

fn expect_smooth(atlas: &ResolutionAtlas, id: &str) -> Result<()> {
    let pts = singular_in_domain(atlas, id)?;
    if pts.is_empty() {
        Ok(())
    } else {
        Err(unexpected(atlas, id, "a smooth chart", &pts))
    }
}

fn expect_origin(atlas: &ResolutionAtlas, id: &str) -> Result<()> {
    let pts = singular_in_domain(atlas, id)?;
    if pts == [origin()] {
        Ok(())
    } else {
        Err(unexpected(atlas, id, "exactly the origin", &pts))
    }
}

fn child(ids: &[String], kind: ChartKind) -> String {
    let i = kind.exceptional().expect("child kind");
    ids[i].clone()
}

fn new_atlas(family: Family, k: u32) -> Result<ResolutionAtlas> {
    if k < 2 {
        return usage(format!("k must be at least 2, got {k}"));
    }
    if k > 12 {
        return usage(format!("k = {k} is larger than supported (12)"));
    }
    let root = Chart::root("root", pichereau_from(&family.defining_poly(k))?);
    Ok(ResolutionAtlas::new(family, k, root, family == Family::D))
}

/// Resolves `x² + y² − z^{2k}` by `k` blow-ups at the origin of successive
/// `z`-charts.
pub fn resolve_a(k: u32) -> Result<ResolutionAtlas> {
    let mut atlas = new_atlas(Family::A, k)?;
    let mut cur = "root".to_string();
    for step in 0..k {
        expect_origin(&atlas, &cur)?;
        let ids = atlas.blow_up_chart(&cur, origin())?;
        info!("A_{}: blow-up {} at origin of {cur}", 2 * k, step + 1);
        for side in [ChartKind::X, ChartKind::Y] {
            expect_smooth(&atlas, &child(&ids, side))?;
        }
        cur = child(&ids, ChartKind::Z);
    }
    expect_smooth(&atlas, &cur)?;
    let target = Poly::parse("x^2 + y^2 - 1", &crate::poisson::XYZ)?;
    if atlas.chart(&cur)?.strict() != &target {
        return Err(Error::Structural(format!(
            "final chart {cur}: strict transform {} is not {target}",
            atlas.chart(&cur)?.strict()
        )));
    }
    atlas.recompute_leaves();
    Ok(atlas)
}

/// Resolves `z x² + y² − z^{2k+1}`: `k` blow-ups along the `z`-charts (with
/// the origin of each singular `x`-chart blown up once more), then one
/// blow-up at each of the two nodes `(±1, 0, 0)` of the last `z`-chart and a
/// final blow-up at the node this leaves behind.
pub fn resolve_d(k: u32) -> Result<ResolutionAtlas> {
    let mut atlas = new_atlas(Family::D, k)?;
    let mut cur = "root".to_string();
    for step in 0..k {
        expect_origin(&atlas, &cur)?;
        let ids = atlas.blow_up_chart(&cur, origin())?;
        info!("D: blow-up {} at origin of {cur}", step + 1);
        expect_smooth(&atlas, &child(&ids, ChartKind::Y))?;
        let xc = child(&ids, ChartKind::X);
        let pts = singular_in_domain(&atlas, &xc)?;
        if pts == [origin()] {
            let sub = atlas.blow_up_chart(&xc, origin())?;
            for id in &sub {
                expect_smooth(&atlas, id)?;
            }
        } else if !pts.is_empty() {
            return Err(unexpected(&atlas, &xc, "nothing or the origin", &pts));
        }
        cur = child(&ids, ChartKind::Z);
    }
    let target = Poly::parse("z*x^2 + y^2 - z", &crate::poisson::XYZ)?;
    if atlas.chart(&cur)?.strict() != &target {
        return Err(Error::Structural(format!(
            "chart {cur}: strict transform {} is not {target}",
            atlas.chart(&cur)?.strict()
        )));
    }
    let nodes = singular_in_domain(&atlas, &cur)?;
    let expected = [[int(-1), int(0), int(0)], [int(1), int(0), int(0)]];
    if nodes != expected {
        return Err(unexpected(&atlas, &cur, "the two nodes (±1, 0, 0)", &nodes));
    }
    for node in nodes {
        let ids = atlas.blow_up_chart(&cur, node)?;
        let mut left = Vec::new();
        for id in &ids {
            for p in singular_in_domain(&atlas, id)? {
                left.push((id.clone(), p));
            }
        }
        match left.as_slice() {
            [(id, p)] => {
                let sub = atlas.blow_up_chart(id, p.clone())?;
                for s in &sub {
                    expect_smooth(&atlas, s)?;
                }
            }
            _ => {
                let pts: Vec<[Rat; 3]> = left.iter().map(|(_, p)| p.clone()).collect();
                return Err(unexpected(&atlas, &cur, "one remaining node after the point blow-up", &pts));
            }
        }
    }
    atlas.recompute_leaves();
    debug_assert!(atlas.leaves.iter().all(|l| !l.is_empty()));
    Ok(atlas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::XYZ;

    fn p(s: &str) -> Poly {
        Poly::parse(s, &XYZ).unwrap()
    }

    #[test]
    fn a4_chain() {
        let a = resolve_a(2).unwrap();
        assert_eq!(a.blowup_count(), 2);
        let chain = a.z_chain();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[1].strict(), &p("x^2 + y^2 - z^2"));
        assert_eq!(chain[2].strict(), &p("x^2 + y^2 - 1"));
        assert_eq!(a.leaves.len(), 5);
    }

    #[test]
    fn d5_chain() {
        let a = resolve_d(2).unwrap();
        let chain = a.z_chain();
        let last = chain.last().unwrap();
        assert_eq!(last.strict(), &p("z*x^2 + y^2 - z"));
        assert_eq!(last.surface.b_xy, p("x^2 - 1"));
        assert_eq!(last.surface.b_yz, p("2*x*z"));
        assert_eq!(last.surface.b_zx, p("2*y"));
        for leaf in a.leaf_charts() {
            assert!(super::super::singular_points(leaf.strict(), &leaf.search_box(SEARCH_RADIUS))
                .iter()
                .all(|s| !a.in_domain(&leaf.id, &s.approx, 0.0).unwrap()));
        }
    }

    #[test]
    fn k_zero_is_usage_error() {
        assert!(matches!(resolve_a(0), Err(Error::Usage(_))));
    }

    #[test]
    fn exceptional_loci_map_to_origin() {
        let a = resolve_a(3).unwrap();
        for c in &a.charts[1..] {
            let m = a.composite_map(&c.id).unwrap();
            let e = c.kind.exceptional().unwrap();
            let mut pt = [0.3, -0.2, 0.1];
            pt[e] = 0.0;
            if c.center.iter().all(num_traits::Zero::is_zero) {
                let amb = [m[0].eval_f64(&pt), m[1].eval_f64(&pt), m[2].eval_f64(&pt)];
                assert!(amb.iter().all(|v| v.abs() < 1e-15), "{} {:?}", c.id, amb);
            }
        }
    }
}
