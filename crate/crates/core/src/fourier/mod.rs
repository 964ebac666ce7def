//! Fourier analysis of functions on the quotient of the plane by
//! `G = {(p, q) ↦ (p + nq, q)}` or by `G′`, which adds `(p, q) ↦ (p, −q)`.
//!
//! For fixed `q` an invariant function is periodic in `p` with period `q`,
//! so after `p = uq` it expands as
//! `α_0(q) + Σ α_n(q) cos(2πnp/q) + β_n(q) sin(2πnp/q)`.
//!
//! ```
//! use duval::fourier::{coeff, Group, InvariantFn};
//!
//! let f = InvariantFn::from_text("q^2*cos(theta) + 3", Group::G).unwrap();
//! let (a1, b1) = coeff(&f, 1, 0.5).unwrap();
//! assert!((a1 - 0.25).abs() < 1e-12 && b1.abs() < 1e-12);
//! assert!((coeff(&f, 0, 0.5).unwrap().0 - 3.0).abs() < 1e-12);
//! ```

mod checks;
pub mod diff;
pub mod quad;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use checks::{
    coeff_flatness, decay_check, flatness_check, tail_bound, CoeffFlatnessReport, DecayReport,
    FlatnessEntry, FlatnessReport, TailBound,
};

use crate::error::{usage, Error, Result};
use crate::expr::Expr;
use crate::io::{fmt_f64, SCHEMA_VERSION};
use crate::trig::TrigPoly;
use quad::{integrate, QuadOptions};

/// Which group the function is invariant under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Group {
    G,
    #[serde(rename = "Gprime")]
    GPrime,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::G => "G",
            Group::GPrime => "Gprime",
        })
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Group> {
        match s {
            "G" => Ok(Group::G),
            "Gprime" | "G'" | "G′" => Ok(Group::GPrime),
            _ => usage(format!("unknown group `{s}` (expected G or Gprime)")),
        }
    }
}

pub type Evaluator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Tolerance of the invariance gate.
pub const INVARIANCE_TOL: f64 = 1e-9;
/// Absolute tolerance of coefficient quadrature.
pub const QUAD_TOL: f64 = 1e-11;

/// A black-box function of `(p, q)` that passed the invariance gate.
#[derive(Clone)]
pub struct InvariantFn {
    label: String,
    group: Group,
    smooth: bool,
    exact: Option<TrigPoly>,
    eval: Evaluator,
}

impl fmt::Debug for InvariantFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantFn")
            .field("label", &self.label)
            .field("group", &self.group)
            .field("smooth", &self.smooth)
            .finish()
    }
}

/// Largest invariance defect found on the gate's sample set, relative to
/// `max(1, |f|)`.
pub fn invariance_residual(f: &(dyn Fn(f64, f64) -> f64 + Sync), group: Group) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
    let mut worst: f64 = 0.0;
    for n in -3i32..=3 {
        for _ in 0..100 {
            let p = rng.gen_range(-2.0..2.0);
            let q = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let v = f(p, q);
            let scale = v.abs().max(1.0);
            let mut d = (f(p + n as f64 * q, q) - v).abs();
            if group == Group::GPrime {
                d = d.max((f(p, -q) - v).abs());
            }
            if !d.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(d / scale);
        }
    }
    worst
}

impl InvariantFn {
    /// Wraps `f` after checking invariance on 700 sample points.
    pub fn new<F>(label: impl Into<String>, group: Group, smooth: bool, f: F) -> Result<InvariantFn>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let label = label.into();
        let r = invariance_residual(&f, group);
        if !(r < INVARIANCE_TOL) {
            return Err(Error::Domain(format!(
                "`{label}` is not {group}-invariant: residual {r:e} exceeds {INVARIANCE_TOL:e}"
            )));
        }
        Ok(InvariantFn {
            label,
            group,
            smooth,
            exact: None,
            eval: Arc::new(f),
        })
    }

    /// From a parsed expression. Expressions are declared smooth; the exact
    /// form is attached when one exists.
    pub fn from_expr(e: &Expr, group: Group) -> Result<InvariantFn> {
        let ev = e.clone();
        let mut f = InvariantFn::new(e.to_string(), group, true, move |p, q| ev.eval(p, q))?;
        f.exact = e.to_trig_poly();
        Ok(f)
    }

    pub fn from_text(src: &str, group: Group) -> Result<InvariantFn> {
        InvariantFn::from_expr(&Expr::parse(src)?, group)
    }

    pub fn eval(&self, p: f64, q: f64) -> f64 {
        (self.eval)(p, q)
    }

    pub fn evaluator(&self) -> Evaluator {
        self.eval.clone()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn declared_smooth(&self) -> bool {
        self.smooth
    }

    pub fn exact(&self) -> Option<&TrigPoly> {
        self.exact.as_ref()
    }
}

/// `α_0..α_N` and `β_1..β_N` at one `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coeffs {
    pub alpha: Vec<f64>,
    /// `beta[n - 1]` is `β_n`.
    pub beta: Vec<f64>,
}

impl Coeffs {
    pub fn n_max(&self) -> usize {
        self.beta.len()
    }

    /// Truncated series at `(p, q)`.
    pub fn partial_sum(&self, n: usize, p: f64, q: f64) -> f64 {
        if q == 0.0 {
            return self.alpha[0];
        }
        let th = 2.0 * PI * p / q;
        let mut s = self.alpha[0];
        for k in 1..=n.min(self.n_max()) {
            let (sn, cn) = (k as f64 * th).sin_cos();
            s += self.alpha[k] * cn + self.beta[k - 1] * sn;
        }
        s
    }
}

/// All coefficients up to `n_max` at `q`, from one vector-valued quadrature.
pub fn coeffs_at(f: &InvariantFn, n_max: usize, q: f64) -> Result<Coeffs> {
    if q == 0.0 {
        let mut alpha = vec![0.0; n_max + 1];
        alpha[0] = f.eval(0.0, 0.0);
        return Ok(Coeffs {
            alpha,
            beta: vec![0.0; n_max],
        });
    }
    let dim = 2 * n_max + 1;
    let opts = QuadOptions {
        abs_tol: QUAD_TOL,
        initial_panels: 16.max(n_max),
        ..Default::default()
    };
    let v = integrate(
        |u, out: &mut [f64]| {
            let g = f.eval(u * q, q);
            out[0] = g;
            for n in 1..=n_max {
                let (s, c) = (2.0 * PI * n as f64 * u).sin_cos();
                out[n] = 2.0 * g * c;
                out[n_max + n] = 2.0 * g * s;
            }
        },
        -0.5,
        0.5,
        dim,
        &opts,
    )?;
    Ok(Coeffs {
        alpha: v[..=n_max].to_vec(),
        beta: v[n_max + 1..].to_vec(),
    })
}

/// `(α_n(q), β_n(q))`; `β_0` is reported as 0.
pub fn coeff(f: &InvariantFn, n: usize, q: f64) -> Result<(f64, f64)> {
    let c = coeffs_at(f, n, q)?;
    Ok((c.alpha[n], if n == 0 { 0.0 } else { c.beta[n - 1] }))
}

/// `α_0(q) + Σ_{n≤N} α_n(q) cos(2πnp/q) + β_n(q) sin(2πnp/q)`.
pub fn partial_sum(f: &InvariantFn, n: usize, p: f64, q: f64) -> Result<f64> {
    Ok(coeffs_at(f, n, q)?.partial_sum(n, p, q))
}

/// Function of `q` alone.
pub type QFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Splits `f` as `h(q) + g(p, q)` with `h(q) = f(0, q)`, so `g(0, q) = 0`.
pub fn decompose(f: &InvariantFn) -> (QFn, InvariantFn) {
    let ev = f.evaluator();
    let h: QFn = Arc::new(move |q| ev(0.0, q));
    let ev = f.evaluator();
    let g = InvariantFn {
        label: format!("({}) - h(q)", f.label),
        group: f.group,
        smooth: f.smooth,
        exact: None,
        eval: Arc::new(move |p, q| ev(p, q) - ev(0.0, q)),
    };
    (h, g)
}

/// Mean of `f²` over a period against `α_0² + ½Σ(α_n² + β_n²)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParsevalCheck {
    pub q: f64,
    pub n_max: usize,
    pub series: f64,
    pub direct: f64,
    pub relative_error: f64,
}

pub fn parseval(f: &InvariantFn, n_max: usize, q: f64) -> Result<ParsevalCheck> {
    let c = coeffs_at(f, n_max, q)?;
    let series = c.alpha[0].powi(2)
        + 0.5 * (c.alpha[1..].iter().map(|a| a * a).sum::<f64>() + c.beta.iter().map(|b| b * b).sum::<f64>());
    let direct = if q == 0.0 {
        f.eval(0.0, 0.0).powi(2)
    } else {
        integrate(
            |u, o: &mut [f64]| o[0] = f.eval(u * q, q).powi(2),
            -0.5,
            0.5,
            1,
            &QuadOptions {
                abs_tol: QUAD_TOL,
                initial_panels: 16.max(n_max),
                ..Default::default()
            },
        )?[0]
    };
    let relative_error = if direct == 0.0 {
        series.abs()
    } else {
        (series - direct).abs() / direct.abs()
    };
    Ok(ParsevalCheck {
        q,
        n_max,
        series,
        direct,
        relative_error,
    })
}

/// Finite-difference `q`-derivatives of the coefficient rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Derivatives {
    pub i_max: u32,
    /// `alpha[i - 1][n][g]` is `α_n^{(i)}(q_g)`.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// `beta[i - 1][n - 1][g]` is `β_n^{(i)}(q_g)`.
    pub beta: Vec<Vec<Vec<f64>>>,
}

/// Sampled coefficient functions on a `q`-grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoeffSeries {
    pub group: Group,
    pub label: String,
    pub n_max: usize,
    pub abs_tol: f64,
    pub q_grid: Vec<f64>,
    /// `alpha[n][g]` is `α_n(q_g)`.
    pub alpha: Vec<Vec<f64>>,
    /// `beta[n - 1][g]` is `β_n(q_g)`; there is no `β_0` row.
    pub beta: Vec<Vec<f64>>,
    pub derivatives: Option<Derivatives>,
}

/// `i`-th derivative in `q` of every coefficient at `q`.
pub(crate) fn coeff_derivs(f: &InvariantFn, n_max: usize, q: f64, i: u32) -> Result<Coeffs> {
    if i == 0 {
        return coeffs_at(f, n_max, q);
    }
    let mut levels = Vec::with_capacity(3);
    for h in diff::STEPS {
        let mut acc = Coeffs {
            alpha: vec![0.0; n_max + 1],
            beta: vec![0.0; n_max],
        };
        for (off, w) in diff::stencil(i, h) {
            let c = coeffs_at(f, n_max, q + off)?;
            for (a, v) in acc.alpha.iter_mut().zip(&c.alpha) {
                *a += w * v;
            }
            for (b, v) in acc.beta.iter_mut().zip(&c.beta) {
                *b += w * v;
            }
        }
        levels.push(acc);
    }
    let ex = |pick: &dyn Fn(&Coeffs) -> f64| diff::richardson([pick(&levels[0]), pick(&levels[1]), pick(&levels[2])]);
    Ok(Coeffs {
        alpha: (0..=n_max).map(|n| ex(&|c: &Coeffs| c.alpha[n])).collect(),
        beta: (0..n_max).map(|n| ex(&|c: &Coeffs| c.beta[n])).collect(),
    })
}

fn transpose(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = cols.first().map_or(0, Vec::len);
    (0..rows).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
}

impl CoeffSeries {
    /// Samples `α_n, β_n` for `n ≤ n_max` on `q_grid`, plus derivative rows
    /// up to order `i_max` when `i_max > 0`. Grid points run in parallel.
    pub fn compute(f: &InvariantFn, n_max: usize, q_grid: &[f64], i_max: u32) -> Result<CoeffSeries> {
        if q_grid.is_empty() || q_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return usage("q grid must be non-empty and strictly increasing");
        }
        let per_q: Vec<Vec<Coeffs>> = q_grid
            .par_iter()
            .map(|&q| (0..=i_max).map(|i| coeff_derivs(f, n_max, q, i)).collect())
            .collect::<Result<_>>()?;
        let rows = |i: usize| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
            let a: Vec<Vec<f64>> = per_q.iter().map(|c| c[i].alpha.clone()).collect();
            let b: Vec<Vec<f64>> = per_q.iter().map(|c| c[i].beta.clone()).collect();
            (transpose(&a), if n_max == 0 { Vec::new() } else { transpose(&b) })
        };
        let (alpha, beta) = rows(0);
        let derivatives = (i_max > 0).then(|| {
            let (a, b): (Vec<_>, Vec<_>) = (1..=i_max as usize).map(rows).unzip();
            Derivatives { i_max, alpha: a, beta: b }
        });
        Ok(CoeffSeries {
            group: f.group,
            label: f.label.clone(),
            n_max,
            abs_tol: QUAD_TOL,
            q_grid: q_grid.to_vec(),
            alpha,
            beta,
            derivatives,
        })
    }

    /// Evenly spaced grid of `n` points on `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// CSV with columns `q, alpha_0..alpha_N, beta_1..beta_N`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["q".to_string()];
        header.extend((0..=self.n_max).map(|n| format!("alpha_{n}")));
        header.extend((1..=self.n_max).map(|n| format!("beta_{n}")));
        out.write_record(&header)?;
        for (g, q) in self.q_grid.iter().enumerate() {
            let mut rec = vec![fmt_f64(*q)];
            rec.extend(self.alpha.iter().map(|r| fmt_f64(r[g])));
            rec.extend(self.beta.iter().map(|r| fmt_f64(r[g])));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// JSON document with metadata.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            #[serde(flatten)]
            series: &'a CoeffSeries,
        }
        crate::io::to_json_string(&Doc {
            schema_version: SCHEMA_VERSION,
            series: self,
        })
    }

    /// Largest odd part of an `α` row and even part of a `β` row. The grid
    /// must be symmetric about 0.
    pub fn parity_defect(&self) -> Result<(f64, f64)> {
        let g = &self.q_grid;
        let m = g.len();
        if (0..m).any(|i| (g[i] + g[m - 1 - i]).abs() > 1e-12) {
            return usage("parity check needs a grid symmetric about 0");
        }
        let defect = |rows: &[Vec<f64>], sign: f64| {
            rows.iter()
                .flat_map(|r| (0..m).map(move |i| (r[i] - sign * r[m - 1 - i]).abs()))
                .fold(0.0, f64::max)
        };
        Ok((defect(&self.alpha, 1.0), defect(&self.beta, -1.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> InvariantFn {
        InvariantFn::from_text(s, Group::G).unwrap()
    }

    #[test]
    fn gate_rejects_non_invariant() {
        assert!(matches!(InvariantFn::from_text("p", Group::G), Err(Error::Domain(_))));
        assert!(matches!(
            InvariantFn::from_text("q*cos(theta)", Group::GPrime),
            Err(Error::Domain(_))
        ));
        assert!(InvariantFn::from_text("q^2*cos(theta)", Group::GPrime).is_ok());
    }

    #[test]
    fn spec_style_examples() {
        let f = g("q^2");
        assert!(coeff(&f, 3, 0.7).unwrap().0.abs() < 1e-12);
        assert!((coeff(&f, 0, 0.7).unwrap().0 - 0.49).abs() < 1e-12);
        let f = g("q^3*cos(theta)");
        let (a, b) = coeff(&f, 1, 1.3).unwrap();
        assert!((a - 1.3f64.powi(3)).abs() < 1e-11 && b.abs() < 1e-11);
        let f = g("flat(sin(theta))");
        for q in [0.2, 0.5, 1.0, 2.0] {
            let (a, b) = coeff(&f, 1, q).unwrap();
            assert!(a.abs() < 1e-11 && (b - (-1.0 / (q * q)).exp()).abs() < 1e-11);
        }
        assert_eq!(coeff(&f, 1, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn partial_sums_converge() {
        let f = g("flat(1/(2 - cos(theta)))");
        let mut last = f64::INFINITY;
        for n in [5, 10, 20, 40] {
            let mut err: f64 = 0.0;
            for q in [0.3, 0.8, 1.5] {
                for p in [-0.4, 0.1, 0.9] {
                    err = err.max((partial_sum(&f, n, p, q).unwrap() - f.eval(p, q)).abs());
                }
            }
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-6);
        assert_eq!(partial_sum(&f, 4, 0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn parseval_and_parity() {
        let f = InvariantFn::from_text("flat(exp(cos(theta))) + flat(q*sin(theta))", Group::GPrime).unwrap();
        for q in [0.4, 1.0, 1.7] {
            assert!(parseval(&f, 30, q).unwrap().relative_error < 1e-6);
        }
        let s = CoeffSeries::compute(&f, 4, &CoeffSeries::linspace(-1.5, 1.5, 13), 0).unwrap();
        let (a, b) = s.parity_defect().unwrap();
        assert!(a < 1e-7 && b < 1e-7);
        assert!(s.beta[0].iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn decompose_splits_at_p_zero() {
        let f = g("q^2 + flat(cos(theta))");
        let (h, r) = decompose(&f);
        for q in [0.3, 1.0, 2.0] {
            assert!((h(q) - q * q - (-1.0 / (q * q)).exp()).abs() < 1e-15);
            assert_eq!(r.eval(0.0, q), 0.0);
            let want = (-1.0 / (q * q)).exp() * ((2.0 * PI * 0.2 / q).cos() - 1.0);
            assert!((r.eval(0.2, q) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_layout() {
        let s = CoeffSeries::compute(&g("3"), 0, &[0.5, 1.0], 0).unwrap();
        let csv = s.to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("q,alpha_0"));
        for l in lines {
            let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
            assert!((v - 3.0).abs() < 1e-14);
        }
        let s = CoeffSeries::compute(&g("q^2*cos(theta)"), 2, &[1.0], 1).unwrap();
        let csv = s.to_csv().unwrap();
        assert!(csv.starts_with("q,alpha_0,alpha_1,alpha_2,beta_1,beta_2\n"));
        let d = s.derivatives.unwrap();
        assert!((d.alpha[0][1][0] - 2.0).abs() < 1e-7);
    }

    #[test]
    fn coeff_is_linear() {
        use proptest::prelude::*;
        proptest!(ProptestConfig::with_cases(16), |(a in -3.0f64..3.0, b in -3.0f64..3.0, q in 0.1f64..2.0)| {
            let f = g("flat(exp(cos(theta)))");
            let h = g("q^2*sin(2*theta) + q");
            let (fa, hb) = (f.evaluator(), h.evaluator());
            let lin = InvariantFn::new("lin", Group::G, true, move |p, q| a * fa(p, q) + b * hb(p, q)).unwrap();
            let cf = coeffs_at(&f, 3, q).unwrap();
            let ch = coeffs_at(&h, 3, q).unwrap();
            let cl = coeffs_at(&lin, 3, q).unwrap();
            for n in 0..=3 {
                prop_assert!((cl.alpha[n] - a * cf.alpha[n] - b * ch.alpha[n]).abs() < 1e-10);
            }
            for n in 0..3 {
                prop_assert!((cl.beta[n] - a * cf.beta[n] - b * ch.beta[n]).abs() < 1e-10);
            }
        });
    }
}
