//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-11,
            initial_panels: 16,
            max_panels: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

fn gk15<F: Fn(f64, &mut [f64])>(f: &F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for j in 0..8 {
        let nodes: &[f64] = if j == 7 { &[0.0] } else { &[-1.0, 1.0] };
        for s in nodes {
            f(c + s * h * XGK[j], buf);
            for d in 0..dim {
                k[d] += WGK[j] * buf[d];
                if j % 2 == 1 {
                    g[d] += WG[j / 2] * buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    Panel { a, b, value: k, err }
}

/// Integrates `f` over `[a, b]`; `f(x, out)` writes `dim` values.
///
/// Panels are bisected, worst error first, until the summed error estimate
/// of every component is below `abs_tol`.
pub fn integrate<F: Fn(f64, &mut [f64])>(
    f: F,
    a: f64,
    b: f64,
    dim: usize,
    opts: &QuadOptions,
) -> Result<Vec<f64>> {
    let mut buf = vec![0.0; dim];
    let n0 = opts.initial_panels.max(1);
    let mut heap = BinaryHeap::new();
    for i in 0..n0 {
        let lo = a + (b - a) * i as f64 / n0 as f64;
        let hi = a + (b - a) * (i + 1) as f64 / n0 as f64;
        heap.push(gk15(&f, lo, hi, dim, &mut buf));
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.err).sum();
        if total_err <= opts.abs_tol || !total_err.is_finite() || heap.len() >= opts.max_panels {
            let mut sum = vec![0.0; dim];
            // fixed summation order keeps results reproducible
            let mut panels: Vec<&Panel> = heap.iter().collect();
            panels.sort_by(|x, y| x.a.total_cmp(&y.a));
            for p in panels {
                for d in 0..dim {
                    sum[d] += p.value[d];
                }
            }
            if total_err <= opts.abs_tol {
                return Ok(sum);
            }
            return Err(Error::Quadrature {
                estimate: sum.first().copied().unwrap_or(f64::NAN),
                error: total_err,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, m, dim, &mut buf));
        heap.push(gk15(&f, m, worst.b, dim, &mut buf));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let v = integrate(|x, o| o[0] = x * x, 0.0, 1.0, 1, &QuadOptions::default()).unwrap();
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-15);
        let v = integrate(
            |x, o| {
                o[0] = (40.0 * x).cos().powi(2);
                o[1] = (-x * x).exp();
            },
            -1.0,
            1.0,
            2,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((v[0] - (1.0 + (80f64).sin() / 80.0)).abs() < 1e-12);
        assert!((v[1] - 1.493_648_265_624_854).abs() < 1e-12);
    }

    #[test]
    fn singular_integrand_reports_error() {
        let opts = QuadOptions {
            max_panels: 50,
            ..Default::default()
        };
        match integrate(|x, o| o[0] = 1.0 / x.abs().sqrt(), -1.0, 1.0, 1, &opts) {
            Err(Error::Quadrature { error, .. }) => assert!(error > 1e-11),
            other => panic!("{other:?}"),
        }
    }
}
