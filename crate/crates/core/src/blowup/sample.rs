use rand::Rng;

use super::ResolutionAtlas;
use crate::error::{usage, Result};
use crate::poly::rat_to_f64;

/// Controls for [`sample_chart_points`].
#[derive(Clone, Copy, Debug)]
pub struct SampleOptions {
    /// Half-width of the coordinate box.
    pub radius: f64,
    /// Only keep points whose ambient image has `z ≥ 0`.
    pub half_space: bool,
    /// Only keep points whose ambient image has `|z| ≤ ambient_z_max`.
    pub ambient_z_max: f64,
    /// Give up after this many attempts per requested point.
    pub attempts_per_point: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            radius: 2.0,
            half_space: false,
            ambient_z_max: f64::INFINITY,
            attempts_per_point: 200,
        }
    }
}

const SCAN: usize = 400;

/// Real roots in `[lo, hi]` of `Σ c_i t^i`, located by sign changes on a grid.
fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let eval = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let mut out = Vec::new();
    let h = (hi - lo) / SCAN as f64;
    let mut a = lo;
    let mut fa = eval(a);
    for i in 1..=SCAN {
        let b = lo + h * i as f64;
        let fb = eval(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let fm = eval(m);
                if fm == 0.0 || (r - l) < 1e-15 * (1.0 + m.abs()) {
                    l = m;
                    r = m;
                    break;
                }
                if fl * fm < 0.0 {
                    r = m;
                } else {
                    l = m;
                    fl = fm;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Random points on the strict transform of chart `id` inside its share of
/// the space.
///
/// Two coordinates are drawn uniformly and the third is solved for; the
/// solved coordinate is the one of highest degree, ties going to `y`.
pub fn sample_chart_points<R: Rng>(
    atlas: &ResolutionAtlas,
    id: &str,
    n: usize,
    opts: &SampleOptions,
    rng: &mut R,
) -> Result<Vec<[f64; 3]>> {
    let chart = atlas.chart(id)?;
    let s = chart.strict();
    let solve = [1usize, 0, 2]
        .into_iter()
        .max_by_key(|&i| (s.degree_in(i), i == 1))
        .expect("three coordinates");
    if s.degree_in(solve) == 0 {
        return usage(format!("chart {id}: strict transform {s} is constant"));
    }
    let sbox = chart.search_box(opts.radius);
    let terms: Vec<(Vec<u32>, f64)> = s.terms().map(|(e, c)| (e.clone(), rat_to_f64(c))).collect();
    let deg = s.degree_in(solve) as usize;
    let mut out = Vec::with_capacity(n);
    let budget = n.saturating_mul(opts.attempts_per_point).max(1);
    for _ in 0..budget {
        if out.len() >= n {
            break;
        }
        let mut p = [0.0; 3];
        for i in 0..3 {
            if i != solve {
                p[i] = rng.gen_range(sbox.lo[i]..=sbox.hi[i]);
            }
        }
        let mut coeffs = vec![0.0; deg + 1];
        for (e, c) in &terms {
            let mut v = *c;
            for i in 0..3 {
                if i != solve {
                    v *= p[i].powi(e[i] as i32);
                }
            }
            coeffs[e[solve] as usize] += v;
        }
        let roots = real_roots(&coeffs, sbox.lo[solve], sbox.hi[solve]);
        if roots.is_empty() {
            continue;
        }
        p[solve] = roots[rng.gen_range(0..roots.len())];
        if !atlas.in_domain(id, &p, 0.0)? {
            continue;
        }
        let amb = atlas.to_ambient(id, &p)?;
        if (opts.half_space && amb[2] < 0.0) || amb[2].abs() > opts.ambient_z_max {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blowup::resolve_a;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roots_of_quadratic() {
        let r = real_roots(&[-2.0, 0.0, 1.0], -3.0, 3.0);
        assert_eq!(r.len(), 2);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn points_lie_on_leaves() {
        let a = resolve_a(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for leaf in a.leaf_charts() {
            let pts = sample_chart_points(&a, &leaf.id, 20, &SampleOptions::default(), &mut rng).unwrap();
            assert_eq!(pts.is_empty(), leaf.id == "root/z/x" || leaf.id == "root/z/y", "{}", leaf.id);
            for p in pts {
                assert!(leaf.strict().eval_f64(&p).abs() < 1e-10);
                let amb = a.to_ambient(&leaf.id, &p).unwrap();
                assert!(a.root().strict().eval_f64(&amb).abs() < 1e-10);
            }
        }
    }
}
