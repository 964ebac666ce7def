use rand::Rng;
use serde::Serialize;

use super::{LeafSeries, LiftedSeries};
use crate::blowup::{sample_chart_points, SampleOptions};
use crate::error::{usage, Result};
use crate::fourier::diff::{richardson, stencil};
use crate::fourier::Group;
use crate::poly::CompiledPoly;

/// Controls for [`smoothness_probe`].
#[derive(Clone, Debug)]
pub struct ProbeOptions {
    /// Leaf to probe; defaults to the end of the `z`-chain when that is a
    /// leaf, else the first leaf with samples near the divisor.
    pub leaf: Option<String>,
    pub points: usize,
    /// Probe points have `|Z|` at most this.
    pub band: f64,
    /// Largest finite-difference step.
    pub h0: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            leaf: None,
            points: 12,
            band: 0.25,
            h0: 2e-3,
        }
    }
}

/// One derivative order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub order: u32,
    /// Largest `|∂_t^D H_N|` over points and tangent directions.
    pub h_max: f64,
    /// `max_points U_n^D` for `n = 1..=N`.
    pub u: Vec<f64>,
    /// Largest log-log slope of the running maximum of `√U_n^D` over
    /// `n ∈ [N/4, N]`, across points.
    pub fit_exponent: f64,
    /// Least-squares `A, B` with `√U_n^D ≈ A + B n^D` on the maxima.
    pub envelope: (f64, f64),
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub group: Group,
    pub leaf: String,
    pub order: u32,
    pub n_max: usize,
    pub points: usize,
    pub z_range: (f64, f64),
    /// Largest relative defect of `X_n² + Y_n² = Z^{2k}` (or
    /// `Z X_n² + Y_n² = Z^{2k+1}`) over points and `n`.
    pub relation_defect: f64,
    /// Largest `|∂_w H_N|` along the direction `w` tangent to the levels of
    /// `Z`; zero when `F` depends on `q` only. `None` when `d = 0`.
    pub level_derivative_max: Option<f64>,
    /// Stencil points where `H_N` could not be evaluated.
    pub skipped: usize,
    pub rows: Vec<ProbeRow>,
    pub passed: bool,
}

fn add(p: &[f64; 3], t: &[f64; 3], s: f64) -> [f64; 3] {
    [p[0] + s * t[0], p[1] + s * t[1], p[2] + s * t[2]]
}

fn normalize(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    (n > 1e-8).then(|| v.map(|c| c / n))
}

/// `D`-th derivative along `t` of a vector-valued map, extrapolated over
/// `h0, h0/2, h0/4`.
fn directional<F>(f: &F, p: &[f64; 3], t: &[f64; 3], order: u32, h0: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64; 3]) -> Option<Vec<f64>>,
{
    if order == 0 {
        return f(p);
    }
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(3);
    for h in [h0, h0 / 2.0, h0 / 4.0] {
        let mut acc: Vec<f64> = Vec::new();
        for (off, w) in stencil(order, h) {
            let v = f(&add(p, t, off))?;
            if acc.is_empty() {
                acc = vec![0.0; v.len()];
            }
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
        }
        raw.push(acc);
    }
    Some((0..raw[0].len()).map(|i| richardson([raw[0][i], raw[1][i], raw[2][i]])).collect())
}

/// Slope of `log y` against `log x` by least squares.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Least-squares `(A, B)` for `y ≈ A + B x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (my - b * mx, b)
}

fn pick_leaf<R: Rng>(ls: &LiftedSeries, opts: &ProbeOptions, sopts: &SampleOptions, rng: &mut R) -> Result<(String, Vec<[f64; 3]>)> {
    let mut candidates: Vec<String> = Vec::new();
    match &opts.leaf {
        Some(id) => {
            ls.leaf(id)?;
            candidates.push(id.clone());
        }
        None => {
            if let Some(end) = ls.atlas.z_chain().last() {
                if ls.atlas.leaves.contains(&end.id) {
                    candidates.push(end.id.clone());
                }
            }
            candidates.extend(ls.atlas.leaves.iter().cloned());
        }
    }
    for id in candidates {
        let leaf = ls.leaf(&id)?;
        let pts: Vec<[f64; 3]> = sample_chart_points(&ls.atlas, &id, 40 * opts.points, sopts, rng)?
            .into_iter()
            .filter(|p| ls.z_value(leaf, p).abs() <= opts.band)
            .take(opts.points)
            .collect();
        if pts.len() == opts.points {
            return Ok((id, pts));
        }
    }
    usage(format!("no leaf has {} sample points with |Z| <= {}", opts.points, opts.band))
}

/// Finite-difference smoothness probe of `H_N` across the exceptional
/// divisor.
///
/// At points of one leaf with small `|Z|`, differentiates along the tangent
/// fields `∂_jS ∂_i − ∂_iS ∂_j` of the strict transform `S`. For each
/// order `D ≤ d` it records the largest derivative of `H_N` and the
/// per-term norms `U_n^D = (∂^D X_n)² + (∂^D Y_n)²`, whose square roots
/// should grow no faster than `n^D`.
pub fn smoothness_probe<R: Rng>(ls: &LiftedSeries, d: u32, opts: &ProbeOptions, rng: &mut R) -> Result<SmoothnessReport> {
    if opts.points == 0 {
        return usage("the probe needs at least one point");
    }
    let sopts = SampleOptions {
        half_space: ls.map.group == Group::GPrime,
        ambient_z_max: 2.0,
        ..SampleOptions::default()
    };
    let (id, pts) = pick_leaf(ls, opts, &sopts, rng)?;
    let leaf: &LeafSeries = ls.leaf(&id)?;
    let strict = ls.atlas.chart(&id)?.strict().clone();
    let grad: Vec<CompiledPoly> = strict.gradient().iter().map(|g| g.compile()).collect();
    let n = ls.n_max;
    let k = ls.map.k as i32;

    let terms = |p: &[f64; 3]| -> Option<Vec<f64>> {
        let (mut xs, ys) = ls.xy_values(leaf, p, n);
        xs.extend(ys);
        xs.iter().all(|v| v.is_finite()).then_some(xs)
    };
    let skipped = std::sync::atomic::AtomicUsize::new(0);
    let h_at = |p: &[f64; 3]| -> Option<Vec<f64>> {
        let out = ls
            .coeffs_for(leaf, p)
            .ok()
            .map(|(q, c)| ls.eval_with(leaf, p, q, &c, &[n]));
        if out.is_none() {
            skipped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        out
    };

    let mut relation_defect: f64 = 0.0;
    let mut z_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut level_max: Option<f64> = (d >= 1).then_some(0.0);
    let mut u_max = vec![vec![0.0f64; n]; d as usize + 1];
    let mut h_max = vec![0.0f64; d as usize + 1];
    let mut exponent = vec![0.0f64; d as usize + 1];
    let lo = (n / 4).max(1);
    let ns: Vec<f64> = (lo..=n).map(|m| m as f64).collect();

    for p in &pts {
        let z = ls.z_value(leaf, p);
        z_range = (z_range.0.min(z), z_range.1.max(z));
        let (xs, ys) = ls.xy_values(leaf, p, n);
        for (x, y) in xs.iter().zip(&ys) {
            let (lhs, rhs) = match ls.map.group {
                Group::G => (x * x + y * y, z.powi(2 * k)),
                Group::GPrime => (z * x * x + y * y, z.powi(2 * k + 1)),
            };
            relation_defect = relation_defect.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        }
        let g: Vec<f64> = grad.iter().map(|c| c.eval(p)).collect();
        let dirs: Vec<[f64; 3]> = [(0usize, 1usize), (0, 2), (1, 2)]
            .iter()
            .filter_map(|&(i, j)| {
                let mut v = [0.0; 3];
                v[i] = g[j];
                v[j] = -g[i];
                normalize(v)
            })
            .collect();
        for order in 0..=d {
            let o = order as usize;
            let mut u_here = vec![0.0f64; n];
            for t in &dirs {
                let Some(v) = directional(&terms, p, t, order, opts.h0) else {
                    continue;
                };
                for m in 0..n {
                    u_here[m] = u_here[m].max(v[m] * v[m] + v[n + m] * v[n + m]);
                }
                if let Some(hv) = directional(&h_at, p, t, order, opts.h0) {
                    h_max[o] = h_max[o].max(hv[0].abs());
                }
            }
            for m in 0..n {
                u_max[o][m] = u_max[o][m].max(u_here[m]);
            }
            let mut run = 0.0f64;
            let env: Vec<f64> = u_here
                .iter()
                .map(|u| {
                    run = run.max(u.sqrt());
                    run
                })
                .collect();
            if env[n - 1] > 1e-12 {
                exponent[o] = exponent[o].max(loglog_slope(&ns, &env[lo - 1..]));
            }
        }
        if let Some(lm) = level_max.as_mut() {
            let h = 1e-6;
            let zg: Vec<f64> = (0..3)
                .map(|i| {
                    let mut e = [0.0; 3];
                    e[i] = h;
                    (ls.z_value(leaf, &add(p, &e, 1.0)) - ls.z_value(leaf, &add(p, &e, -1.0))) / (2.0 * h)
                })
                .collect();
            let w = [
                g[1] * zg[2] - g[2] * zg[1],
                g[2] * zg[0] - g[0] * zg[2],
                g[0] * zg[1] - g[1] * zg[0],
            ];
            if let Some(w) = normalize(w) {
                if let Some(v) = directional(&h_at, p, &w, 1, opts.h0) {
                    *lm = lm.max(v[0].abs());
                }
            }
        }
    }

    let rows: Vec<ProbeRow> = (0..=d)
        .map(|order| {
            let o = order as usize;
            let sq: Vec<f64> = u_max[o].iter().map(|u| u.sqrt()).collect();
            let powers: Vec<f64> = (1..=n).map(|m| (m as f64).powi(order as i32)).collect();
            let envelope = linear_fit(&powers, &sq);
            let passed = if order == 0 {
                relation_defect < 1e-9
            } else {
                exponent[o] <= order as f64 + 0.1
            };
            ProbeRow {
                order,
                h_max: h_max[o],
                u: u_max[o].clone(),
                fit_exponent: exponent[o],
                envelope,
                passed,
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(SmoothnessReport {
        group: ls.map.group,
        leaf: id,
        order: d,
        n_max: n,
        points: pts.len(),
        z_range,
        relation_defect,
        level_derivative_max: level_max,
        skipped: skipped.into_inner(),
        rows,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::{resolve_a, resolve_d};
    use crate::fourier::InvariantFn;
    use crate::lift::{build_h, make_phi};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series(g: Group, expr: &str, n: usize) -> LiftedSeries {
        let atlas = match g {
            Group::G => resolve_a(2).unwrap(),
            Group::GPrime => resolve_d(2).unwrap(),
        };
        let m = make_phi(g, 2).unwrap();
        build_h(&atlas, &m, &InvariantFn::from_text(expr, g).unwrap(), n).unwrap()
    }

    #[test]
    fn final_a_leaf_grows_linearly() {
        let ls = series(Group::G, "flat(cos(theta))", 40);
        let r = smoothness_probe(&ls, 2, &ProbeOptions::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.leaf, "root/z/z");
        assert!(r.z_range.0 < 0.0 && r.z_range.1 > 0.0, "{:?}", r.z_range);
        assert!(r.relation_defect < 1e-12);
        let u0 = &r.rows[0].u;
        assert!(u0.iter().all(|u| (u - u0[0]).abs() < 1e-12));
        assert!(r.rows[1].fit_exponent <= 1.1 && r.rows[1].fit_exponent > 0.5, "{:?}", r.rows[1]);
        assert!(r.rows[2].fit_exponent <= 2.1, "{:?}", r.rows[2]);
        assert!(r.passed);
    }

    #[test]
    fn q_only_has_no_level_derivative() {
        let ls = series(Group::G, "q^2 + flat(1)", 10);
        let r = smoothness_probe(&ls, 1, &ProbeOptions::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(r.level_derivative_max.unwrap() < 1e-8, "{r:?}");
    }

    #[test]
    fn gprime_half_space() {
        let ls = series(Group::GPrime, "flat(exp(cos(theta)))", 20);
        let r = smoothness_probe(&ls, 1, &ProbeOptions::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(r.z_range.0 >= 0.0);
        assert!(r.passed, "{r:?}");
    }
}
