use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::diff::{self, STEPS};
use super::{coeff_derivs, InvariantFn};
use crate::error::{usage, Result};

/// Threshold for flatness claims.
pub const FLAT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessEntry {
    pub i: u32,
    pub j: u32,
    pub p: f64,
    pub estimate: f64,
    /// Unextrapolated differences at each step of the schedule.
    pub raw: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub label: String,
    pub declared_smooth: bool,
    pub i_max: u32,
    pub j_max: u32,
    pub steps: [f64; 3],
    pub tolerance: f64,
    pub max_abs: f64,
    pub flat: bool,
    /// Orders `(i, j)` whose differences grow as the step shrinks.
    pub growth: Vec<(u32, u32)>,
    pub entries: Vec<FlatnessEntry>,
}

/// Estimates `∂^{i+j}f/∂p^i∂q^j (p, 0)` for `1 ≤ i ≤ i_max`, `0 ≤ j ≤ j_max`.
pub fn flatness_check(f: &InvariantFn, i_max: u32, j_max: u32, p_samples: &[f64]) -> FlatnessReport {
    let ev = f.evaluator();
    let g = |p: f64, q: f64| ev(p, q);
    let mut entries = Vec::new();
    let mut growth = Vec::new();
    for i in 1..=i_max {
        for j in 0..=j_max {
            for &p in p_samples {
                let raw = diff::mixed_raw(&g, p, 0.0, i, j, &STEPS);
                let estimate = diff::richardson(raw);
                if raw[2].abs() > FLAT_TOL && raw[2].abs() > 2.0 * raw[0].abs() && !growth.contains(&(i, j)) {
                    growth.push((i, j));
                }
                entries.push(FlatnessEntry { i, j, p, estimate, raw });
            }
        }
    }
    let max_abs = entries
        .iter()
        .map(|e| if e.estimate.is_finite() { e.estimate.abs() } else { f64::INFINITY })
        .fold(0.0, f64::max);
    FlatnessReport {
        label: f.label().to_string(),
        declared_smooth: f.declared_smooth(),
        i_max,
        j_max,
        steps: STEPS,
        tolerance: FLAT_TOL,
        max_abs,
        flat: max_abs < FLAT_TOL && growth.is_empty(),
        growth,
        entries,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoeffFlatnessReport {
    pub n_max: usize,
    /// Derivative orders checked at `q = 0`.
    pub orders: Vec<u32>,
    pub max_abs: f64,
    pub flat: bool,
}

/// `α_n^{(j)}(0)` and `β_n^{(j)}(0)` for `1 ≤ n ≤ n_max`, `j ≤ j_max`.
pub fn coeff_flatness(f: &InvariantFn, n_max: usize, j_max: u32) -> Result<CoeffFlatnessReport> {
    let mut max_abs: f64 = 0.0;
    for j in 0..=j_max {
        let c = coeff_derivs(f, n_max, 0.0, j)?;
        for v in c.alpha[1..].iter().chain(&c.beta) {
            max_abs = max_abs.max(v.abs());
        }
    }
    Ok(CoeffFlatnessReport {
        n_max,
        orders: (0..=j_max).collect(),
        max_abs,
        flat: max_abs < FLAT_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub k: u32,
    pub i: u32,
    pub m: f64,
    pub n_max: usize,
    /// `(2π)^{-k} max |∂^{k+i}f/∂q^{k+i}(uq, q)|` over the sampling grid.
    pub constant: f64,
    pub u_points: usize,
    pub q_points: usize,
    /// `q`-grid on which the coefficients were tested.
    pub test_grid: Vec<f64>,
    /// Largest `|c_n^{(i)}(q)/q^k| · n^k / K` observed.
    pub ratio: f64,
    /// `(n, q, "alpha" | "beta")` attaining `ratio`.
    pub worst: Option<(usize, f64, String)>,
    pub passed: bool,
}

const U_POINTS: usize = 101;
const Q_POINTS: usize = 401;
const TEST_POINTS: usize = 40;

/// Checks `|α_n^{(i)}(q)/q^k| ≤ K/n^k` (and the `β` analogue) for
/// `n ≤ n_max` on a grid of `(−M, M) \ {0}`.
///
/// `K` is a grid maximum of the `(k+i)`-th derivative of `f` in its second
/// argument, taken at `(uq, q)`. Coefficient values below the quadrature
/// and differencing resolution (`1e-10 · 100^i`) count as zero.
pub fn decay_check(f: &InvariantFn, k: u32, i: u32, m: f64, n_max: usize) -> Result<DecayReport> {
    if k < 1 || !(m > 0.0) {
        return usage("decay_check needs k >= 1 and M > 0");
    }
    let ev = f.evaluator();
    let order = k + i;
    let max_d = (0..Q_POINTS)
        .into_par_iter()
        .map(|a| {
            let q = -m + 2.0 * m * a as f64 / (Q_POINTS - 1) as f64;
            (0..U_POINTS)
                .map(|b| {
                    let p = q * b as f64 / (U_POINTS - 1) as f64;
                    diff::deriv(&|s| ev(p, s), q, order, STEPS[0]).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let constant = max_d / (2.0 * PI).powi(k as i32);
    let test_grid: Vec<f64> = (0..TEST_POINTS)
        .map(|a| -m + 2.0 * m * (a as f64 + 0.5) / TEST_POINTS as f64)
        .collect();
    let floor = 1e-10 * 100f64.powi(i as i32);
    let per_q: Vec<(f64, Option<(usize, f64, String)>)> = test_grid
        .par_iter()
        .map(|&q| -> Result<_> {
            let c = coeff_derivs(f, n_max, q, i)?;
            let mut best = (0.0, None);
            let rows = (1..=n_max).flat_map(|n| [(n, c.alpha[n], "alpha"), (n, c.beta[n - 1], "beta")]);
            for (n, v, name) in rows {
                if v.abs() < floor {
                    continue;
                }
                let lhs = v.abs() / q.abs().powi(k as i32) * (n as f64).powi(k as i32);
                let r = if constant > 0.0 { lhs / constant } else { f64::INFINITY };
                if r > best.0 {
                    best = (r, Some((n, q, name.to_string())));
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (ratio, worst) = per_q
        .into_iter()
        .fold((0.0, None), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok(DecayReport {
        k,
        i,
        m,
        n_max,
        constant,
        u_points: U_POINTS,
        q_points: Q_POINTS,
        test_grid,
        ratio,
        worst,
        passed: ratio <= 1.0,
    })
}

/// Bound on `Σ_{n>N} |α_n(q)| + |β_n(q)|` uniform in `|q| ≤ q_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBound {
    /// Integration-by-parts order.
    pub order: u32,
    pub q_max: f64,
    /// Grid maximum of `|d^m/du^m f(uq, q)|`.
    pub derivative_max: f64,
}

impl TailBound {
    /// `4 (2π)^{-m} C · N^{1-m}/(m-1)`, from `|α_n|, |β_n| ≤ 2C/(2πn)^m`.
    pub fn at(&self, n: usize) -> f64 {
        let m = self.order as i32;
        if n == 0 {
            return f64::INFINITY;
        }
        4.0 * self.derivative_max / (2.0 * PI).powi(m) * (n as f64).powi(1 - m) / (m - 1) as f64
    }
}

/// Estimates the constant of [`TailBound`] on a `(u, q)` grid with
/// differences in `u` (the integrand is 1-periodic in `u`).
pub fn tail_bound(f: &InvariantFn, order: u32, q_max: f64) -> Result<TailBound> {
    if order < 2 || !(q_max > 0.0) {
        return usage("tail_bound needs order >= 2 and q_max > 0");
    }
    let ev = f.evaluator();
    let derivative_max = (0..Q_POINTS)
        .into_par_iter()
        .map(|a| {
            let q = -q_max + 2.0 * q_max * a as f64 / (Q_POINTS - 1) as f64;
            (0..U_POINTS)
                .map(|b| {
                    let u = b as f64 / (U_POINTS - 1) as f64;
                    diff::deriv(&|t| ev(t * q, q), u, order, STEPS[0]).abs()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(TailBound {
        order,
        q_max,
        derivative_max,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{coeffs_at, Group};

    fn g(s: &str) -> InvariantFn {
        InvariantFn::from_text(s, Group::G).unwrap()
    }

    #[test]
    fn flat_function_is_flat() {
        let r = flatness_check(&g("flat(cos(theta))"), 4, 4, &[-0.5, 0.0, 0.3]);
        assert!(r.flat, "{}", r.max_abs);
        let r = flatness_check(&g("q^2"), 2, 0, &[0.0, 1.0]);
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn linear_envelope_flags_growth() {
        let f = InvariantFn::new("q*cos(theta)", Group::G, false, |p, q| {
            if q == 0.0 {
                0.0
            } else {
                q * (2.0 * PI * p / q).cos()
            }
        })
        .unwrap();
        let r = flatness_check(&f, 1, 1, &[0.123]);
        let e10 = r.entries.iter().find(|e| e.i == 1 && e.j == 0).unwrap();
        assert!(e10.estimate.abs() < 1e-6);
        assert!(!r.flat);
        assert!(r.growth.contains(&(1, 1)));
    }

    #[test]
    fn coefficients_vanish_at_zero() {
        let r = coeff_flatness(&g("flat(exp(cos(theta)))"), 5, 4).unwrap();
        assert!(r.flat && r.orders == vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn decay_bounds() {
        let f = g("flat(cos(theta))");
        for i in [0, 1] {
            let r = decay_check(&f, 2, i, 2.0, 20).unwrap();
            assert!(r.passed, "i={i} ratio={}", r.ratio);
            assert!(r.ratio > 0.1);
        }
        let r = decay_check(&g("q^2"), 2, 0, 2.0, 20).unwrap();
        assert!(r.passed && r.ratio == 0.0);
        let r = decay_check(&g("flat(cos(5*theta))"), 2, 0, 2.0, 8).unwrap();
        assert_eq!(r.worst.as_ref().unwrap().0, 5);
        assert!(r.passed);
    }

    #[test]
    fn tail_bound_dominates() {
        let f = g("flat(1/(2 - cos(theta)))");
        let t = tail_bound(&f, 3, 1.5).unwrap();
        for q in [0.5, 1.0, 1.5] {
            let c = coeffs_at(&f, 60, q).unwrap();
            for n in [5, 10, 20] {
                let tail: f64 = (n + 1..=60).map(|j| c.alpha[j].abs() + c.beta[j - 1].abs()).sum();
                assert!(tail <= t.at(n), "q={q} n={n}");
            }
        }
    }
}
