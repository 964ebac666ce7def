use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::recursion::{lift_to_chart, xy_recursion, LeafLift};
use super::QuotientMap;
use crate::blowup::{sample_chart_points, ResolutionAtlas, SampleOptions};
use crate::error::{structural, usage, Error, Result};
use crate::fourier::{coeffs_at, tail_bound, Coeffs, Group, InvariantFn, TailBound};
use crate::io::{fmt_f64, SCHEMA_VERSION};
use crate::poly::{CompiledPoly, Poly, RatFn};

/// Allowance for quadrature and rounding error in the computed partial sums.
pub const QUAD_ALLOWANCE: f64 = 1e-9;
/// `x_n, y_n` lifted exactly when building `H`.
pub const EXACT_LIFTS: usize = 4;

#[derive(Clone, Debug)]
struct Compiled {
    num: CompiledPoly,
    den: CompiledPoly,
}

impl Compiled {
    fn new(f: &RatFn) -> Compiled {
        Compiled {
            num: f.num().compile(),
            den: f.den().compile(),
        }
    }

    fn eval(&self, p: &[f64; 3]) -> f64 {
        self.num.eval(p) / self.den.eval(p)
    }
}

/// Per-leaf data of the truncated series.
#[derive(Clone, Debug)]
pub struct LeafSeries {
    pub id: String,
    /// `(name, lift)` of `x`, `y`, `z` and the recursion factors.
    pub lifts: Vec<(String, LeafLift)>,
    /// `(name, kind)` of the direct lifts of `X_n, Y_n` for `n ≤ 4`.
    pub exact_lifts: Vec<(String, String)>,
    x: Compiled,
    y: Compiled,
    z: Compiled,
    a: Compiled,
    b_x: Compiled,
    b_y: Compiled,
}

/// `H_N` on every leaf of an atlas.
#[derive(Clone, Debug)]
pub struct LiftedSeries {
    pub atlas: ResolutionAtlas,
    pub map: QuotientMap,
    pub f: InvariantFn,
    pub n_max: usize,
    pub leaves: Vec<LeafSeries>,
}

/// Assembles `H = α_0(Z) + Σ α_n(q)/q^a X_n + β_n(q)/q^b Y_n` up to
/// `n_max`, with `q = Z`, `a = b = k` for `G` and `q = √Z`, `a = 2k`,
/// `b = 2k + 1` for `G′`.
///
/// The recursion factors are lifted to every leaf; `X_n, Y_n` for
/// `n ≤ 4` are also lifted directly. For `G` they must lift. For `G′` only
/// the half-space `Z ≥ 0` matters and the lift kinds are recorded.
pub fn build_h(atlas: &ResolutionAtlas, m: &QuotientMap, f: &InvariantFn, n_max: usize) -> Result<LiftedSeries> {
    if atlas.family != m.family() || atlas.k != m.k {
        return usage(format!(
            "atlas is {}_{} but the map is for group {} with k = {}",
            atlas.family, atlas.k, m.group, m.k
        ));
    }
    if f.group() != m.group {
        return usage(format!("function is {}-invariant, map is for {}", f.group(), m.group));
    }
    if n_max < 1 {
        return usage("N must be at least 1");
    }
    let vars = &m.target.f;
    let k = m.k;
    let v = |i: usize| vars.var_idx(i);
    let zk = |e: u32| v(2).pow(e);
    let rf = |n: Poly, d: Poly| RatFn::new(n, d).expect("nonzero denominator");
    let factors = [
        ("x", RatFn::from_poly(v(0))),
        ("y", RatFn::from_poly(v(1))),
        ("z", RatFn::from_poly(v(2))),
        ("x/z^k", rf(v(0), zk(k))),
        (
            match m.group {
                Group::G => "y/z^k",
                Group::GPrime => "y/z^(k+1)",
            },
            rf(v(1), zk(if m.group == Group::G { k } else { k + 1 })),
        ),
        ("y/z^k", rf(v(1), zk(k))),
    ];
    let xy = xy_recursion(m, EXACT_LIFTS.min(n_max))?;
    let leaves: Vec<LeafSeries> = atlas
        .leaves
        .par_iter()
        .map(|id| -> Result<LeafSeries> {
            let mut exact_lifts = Vec::new();
            for (n, (x, y)) in xy.iter().enumerate() {
                for (name, g) in [("X", x), ("Y", y)] {
                    let label = format!("{name}_{}", n + 1);
                    let kind = match lift_to_chart(atlas, id, g)? {
                        LeafLift::NotLiftable { reason, .. } if m.group == Group::G => {
                            return structural(format!("{label} does not lift to {id}: {reason}"));
                        }
                        LeafLift::NotLiftable { .. } => "not_liftable",
                        LeafLift::Smooth { .. } => "smooth",
                        LeafLift::Polynomial { .. } => "polynomial",
                    };
                    exact_lifts.push((label, kind.to_string()));
                }
            }
            let lifts: Vec<(String, LeafLift)> = factors
                .iter()
                .map(|(name, g)| Ok((name.to_string(), lift_to_chart(atlas, id, g)?)))
                .collect::<Result<_>>()?;
            let c = |i: usize| Compiled::new(&lifts[i].1.value());
            Ok(LeafSeries {
                id: id.clone(),
                x: c(0),
                y: c(1),
                z: c(2),
                a: c(3),
                b_x: c(4),
                b_y: c(5),
                lifts,
                exact_lifts,
            })
        })
        .collect::<Result<_>>()?;
    Ok(LiftedSeries {
        atlas: atlas.clone(),
        map: m.clone(),
        f: f.clone(),
        n_max,
        leaves,
    })
}

impl LiftedSeries {
    pub fn leaf(&self, id: &str) -> Result<&LeafSeries> {
        self.leaves
            .iter()
            .find(|l| l.id == id)
            .ok_or_else(|| Error::Usage(format!("`{id}` is not a leaf")))
    }

    /// `Z` at a leaf point.
    pub fn z_value(&self, leaf: &LeafSeries, pt: &[f64; 3]) -> f64 {
        leaf.z.eval(pt)
    }

    /// The plane coordinate `q` over a value of `Z`.
    pub fn q_of(&self, z: f64) -> Result<f64> {
        match self.map.group {
            Group::G => Ok(z),
            Group::GPrime if z >= 0.0 => Ok(z.sqrt()),
            Group::GPrime if z > -1e-14 => Ok(0.0),
            Group::GPrime => Err(Error::Domain(format!("Z = {z} < 0 is outside the half-space z >= 0"))),
        }
    }

    /// `X_n, Y_n` for `1 ≤ n ≤ n` at a leaf point, by the recursion.
    pub fn xy_values(&self, leaf: &LeafSeries, pt: &[f64; 3], n: usize) -> (Vec<f64>, Vec<f64>) {
        let (a, bx, by) = (leaf.a.eval(pt), leaf.b_x.eval(pt), leaf.b_y.eval(pt));
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let (mut x, mut y) = (leaf.x.eval(pt), leaf.y.eval(pt));
        for _ in 0..n {
            xs.push(x);
            ys.push(y);
            (x, y) = (a * x - bx * y, a * y + by * x);
        }
        (xs, ys)
    }

    /// Coefficients at the `q` over a leaf point.
    pub fn coeffs_for(&self, leaf: &LeafSeries, pt: &[f64; 3]) -> Result<(f64, Coeffs)> {
        let q = self.q_of(self.z_value(leaf, pt))?;
        Ok((q, coeffs_at(&self.f, self.n_max, q)?))
    }

    /// `H_n` for each `n` in `ns`, sharing one coefficient computation.
    pub fn eval_with(&self, leaf: &LeafSeries, pt: &[f64; 3], q: f64, c: &Coeffs, ns: &[usize]) -> Vec<f64> {
        let top = ns.iter().copied().max().unwrap_or(0).min(self.n_max);
        let (xs, ys) = self.xy_values(leaf, pt, top);
        let k = self.map.k as i32;
        let (ea, eb) = match self.map.group {
            Group::G => (k, k),
            Group::GPrime => (2 * k, 2 * k + 1),
        };
        let mut partial = Vec::with_capacity(top + 1);
        let mut s = c.alpha[0];
        partial.push(s);
        for n in 1..=top {
            if q != 0.0 {
                s += c.alpha[n] / q.powi(ea) * xs[n - 1] + c.beta[n - 1] / q.powi(eb) * ys[n - 1];
            }
            partial.push(s);
        }
        ns.iter().map(|&n| partial[n.min(top)]).collect()
    }

    /// `H_n` at a point of leaf `id`.
    pub fn eval(&self, id: &str, pt: &[f64; 3], n: usize) -> Result<f64> {
        if n > self.n_max {
            return usage(format!("N = {n} exceeds the series length {}", self.n_max));
        }
        let leaf = self.leaf(id)?;
        let (q, c) = self.coeffs_for(leaf, pt)?;
        Ok(self.eval_with(leaf, pt, q, &c, &[n])[0])
    }

    /// `F(ψ(chart point))`, or `None` on `Z = 0`.
    pub fn reference(&self, id: &str, pt: &[f64; 3]) -> Result<Option<f64>> {
        let amb = self.atlas.to_ambient(id, pt)?;
        Ok(self.map.preimage(&amb).map(|(p, q)| self.f.eval(p, q)))
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceOptions {
    pub ns: Vec<usize>,
    pub samples_per_leaf: usize,
    /// Sample only where the ambient `|z|` is at most this.
    pub z_max: f64,
    /// Points with `|Z|` at most this are treated as on the divisor.
    pub band: f64,
    pub overlap_tol: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions {
            ns: vec![5, 10, 20, 40],
            samples_per_leaf: 40,
            z_max: 1.5,
            band: 0.05,
            overlap_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub sup_error: f64,
    pub tail_bound: f64,
    /// `tail_bound` plus the quadrature allowance.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub group: Group,
    pub family: String,
    pub k: u32,
    pub function: String,
    pub samples: usize,
    pub excluded_near_divisor: usize,
    pub band: f64,
    pub q_max: f64,
    pub tail: TailBound,
    pub quadrature_allowance: f64,
    pub rows: Vec<ConvergenceRow>,
    pub bound_monotone: bool,
    pub overlap_pairs: usize,
    pub overlap_max: f64,
    pub overlap_tol: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    /// CSV with columns `N, sup_error, tail_bound, bound`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["N", "sup_error", "tail_bound", "bound"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                fmt_f64(r.sup_error),
                fmt_f64(r.tail_bound),
                fmt_f64(r.bound),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Compares `H_N` with `F∘ψ` on off-divisor sample points of every leaf,
/// against the tail bound, and checks leaf evaluators on chart overlaps.
pub fn convergence<R: Rng>(ls: &LiftedSeries, opts: &ConvergenceOptions, rng: &mut R) -> Result<ConvergenceReport> {
    let top = opts.ns.iter().copied().max().unwrap_or(0);
    if top > ls.n_max || opts.ns.is_empty() {
        return usage(format!("truncations {:?} must be within 1..={}", opts.ns, ls.n_max));
    }
    let sopts = SampleOptions {
        half_space: ls.atlas.half_space,
        ambient_z_max: opts.z_max,
        ..Default::default()
    };
    let mut points = Vec::new();
    let mut excluded = 0;
    for (li, leaf) in ls.leaves.iter().enumerate() {
        for p in sample_chart_points(&ls.atlas, &leaf.id, opts.samples_per_leaf, &sopts, rng)? {
            if ls.z_value(leaf, &p).abs() > opts.band {
                points.push((li, p));
            } else {
                excluded += 1;
            }
        }
    }
    struct Eval {
        q: f64,
        errors: Vec<f64>,
        overlap: Vec<f64>,
    }
    let evals: Vec<Eval> = points
        .par_iter()
        .map(|(li, p)| -> Result<Eval> {
            let leaf = &ls.leaves[*li];
            let (q, c) = ls.coeffs_for(leaf, p)?;
            let h = ls.eval_with(leaf, p, q, &c, &opts.ns);
            let want = ls
                .reference(&leaf.id, p)?
                .ok_or_else(|| Error::Structural(format!("sample {p:?} of {} has no preimage", leaf.id)))?;
            let errors = h.iter().map(|v| (v - want).abs()).collect();
            let amb = ls.atlas.to_ambient(&leaf.id, p)?;
            let mut overlap = Vec::new();
            for other in &ls.leaves {
                if other.id == leaf.id {
                    continue;
                }
                let Some(p2) = ls.atlas.from_ambient(&other.id, &amb)? else { continue };
                let strict = ls.atlas.chart(&other.id)?.strict();
                if p2.iter().any(|v| v.abs() > 10.0) || strict.eval_f64(&p2).abs() > 1e-9 {
                    continue;
                }
                let h2 = ls.eval_with(other, &p2, q, &c, &[top])[0];
                overlap.push((h2 - h[h.len() - 1]).abs());
            }
            Ok(Eval { q, errors, overlap })
        })
        .collect::<Result<_>>()?;
    let q_max = evals.iter().map(|e| e.q.abs()).fold(0.0, f64::max);
    let tail = tail_bound(&ls.f, ls.map.k.max(2), q_max.max(1e-3))?;
    let rows: Vec<ConvergenceRow> = opts
        .ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let sup_error = evals.iter().map(|e| e.errors[i]).fold(0.0, f64::max);
            let tail_bound = tail.at(n);
            let bound = tail_bound + QUAD_ALLOWANCE;
            ConvergenceRow {
                n,
                sup_error,
                tail_bound,
                bound,
                passed: sup_error <= bound,
            }
        })
        .collect();
    let mut sorted = rows.clone();
    sorted.sort_by_key(|r| r.n);
    let bound_monotone = sorted.windows(2).all(|w| w[1].tail_bound < w[0].tail_bound || w[0].tail_bound == 0.0);
    let overlap_pairs = evals.iter().map(|e| e.overlap.len()).sum();
    let overlap_max = evals.iter().flat_map(|e| e.overlap.iter().copied()).fold(0.0, f64::max);
    let passed = !evals.is_empty()
        && rows.iter().all(|r| r.passed)
        && bound_monotone
        && overlap_max <= opts.overlap_tol;
    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        group: ls.map.group,
        family: ls.atlas.family.to_string(),
        k: ls.map.k,
        function: ls.f.label().to_string(),
        samples: evals.len(),
        excluded_near_divisor: excluded,
        band: opts.band,
        q_max,
        tail,
        quadrature_allowance: QUAD_ALLOWANCE,
        rows,
        bound_monotone,
        overlap_pairs,
        overlap_max,
        overlap_tol: opts.overlap_tol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{resolve_a, resolve_d};
    use crate::lift::make_phi;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_term_series_is_x1() {
        let a = resolve_a(2).unwrap();
        let m = make_phi(Group::G, 2).unwrap();
        let f = InvariantFn::from_text("q^2*cos(theta)", Group::G).unwrap();
        let ls = build_h(&a, &m, &f, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for leaf in &ls.leaves {
            for p in sample_chart_points(&a, &leaf.id, 5, &SampleOptions::default(), &mut rng).unwrap() {
                let x1 = leaf.x.eval(&p);
                assert!((ls.eval(&leaf.id, &p, 1).unwrap() - x1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn recursion_matches_exact_lifts() {
        let d = resolve_d(2).unwrap();
        let m = make_phi(Group::GPrime, 2).unwrap();
        let f = InvariantFn::from_text("q^2", Group::GPrime).unwrap();
        let ls = build_h(&d, &m, &f, 4).unwrap();
        let xy = xy_recursion(&m, 4).unwrap();
        let opts = SampleOptions { half_space: true, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for leaf in &ls.leaves {
            let pts = sample_chart_points(&d, &leaf.id, 4, &opts, &mut rng).unwrap();
            for p in pts {
                if ls.z_value(leaf, &p).abs() < 0.05 {
                    continue;
                }
                let (xs, ys) = ls.xy_values(leaf, &p, 4);
                for n in 0..4 {
                    let ex = lift_to_chart(&d, &leaf.id, &xy[n].0).unwrap().value().eval_f64(&p);
                    let ey = lift_to_chart(&d, &leaf.id, &xy[n].1).unwrap().value().eval_f64(&p);
                    assert!((xs[n] - ex).abs() < 1e-8 * (1.0 + ex.abs()), "{} n={}", leaf.id, n + 1);
                    assert!((ys[n] - ey).abs() < 1e-8 * (1.0 + ey.abs()));
                }
            }
        }
    }

    #[test]
    fn flat_function_converges_on_a4() {
        let a = resolve_a(2).unwrap();
        let m = make_phi(Group::G, 2).unwrap();
        let f = InvariantFn::from_text("flat(exp(cos(theta)))", Group::G).unwrap();
        let ls = build_h(&a, &m, &f, 40).unwrap();
        let opts = ConvergenceOptions { samples_per_leaf: 10, ..Default::default() };
        let r = convergence(&ls, &opts, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(r.passed, "{r:#?}");
        assert!(r.overlap_pairs > 0);
    }
}
