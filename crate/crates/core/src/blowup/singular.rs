use nalgebra::{Matrix3, Vector3};
use num_traits::Zero;
use rayon::prelude::*;

use crate::poly::{nearest_rational, rat_to_f64, CompiledPoly, Poly, Rat};

/// Axis-aligned search region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl SearchBox {
    pub fn cube(r: f64) -> SearchBox {
        SearchBox {
            lo: [-r; 3],
            hi: [r; 3],
        }
    }

    fn contains(&self, p: &[f64; 3], tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] - tol && p[i] <= self.hi[i] + tol)
    }

    fn grid(&self, n: usize) -> Vec<[f64; 3]> {
        let axis = |i: usize| -> Vec<f64> {
            (0..n)
                .map(|j| self.lo[i] + (self.hi[i] - self.lo[i]) * j as f64 / (n - 1) as f64)
                .collect()
        };
        let (a, b, c) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(n * n * n);
        for x in &a {
            for y in &b {
                for z in &c {
                    out.push([*x, *y, *z]);
                }
            }
        }
        out
    }
}

/// A numerically located singular point, with its exact value when the
/// rounded rational candidate satisfies `S = ∇S = 0` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint {
    pub approx: [f64; 3],
    pub exact: Option<[Rat; 3]>,
}

struct Residual {
    s: CompiledPoly,
    grad: Vec<CompiledPoly>,
    hess: [[CompiledPoly; 3]; 3],
}

impl Residual {
    fn new(s: &Poly) -> Residual {
        let g = s.gradient();
        Residual {
            s: s.compile(),
            grad: g.iter().map(Poly::compile).collect(),
            hess: std::array::from_fn(|i| std::array::from_fn(|j| g[i].partial_idx(j).compile())),
        }
    }

    /// Residual vector `(S, ∂S)` and its Jacobian.
    fn eval(&self, p: &[f64; 3]) -> ([f64; 4], [[f64; 3]; 4]) {
        let mut r = [0.0; 4];
        let mut j = [[0.0; 3]; 4];
        r[0] = self.s.eval(p);
        for i in 0..3 {
            let gi = self.grad[i].eval(p);
            r[i + 1] = gi;
            j[0][i] = gi;
            for k in 0..3 {
                j[i + 1][k] = self.hess[i][k].eval(p);
            }
        }
        (r, j)
    }
}

fn norm2(r: &[f64; 4]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Levenberg–Marquardt on `(S, ∇S) = 0`.
fn descend(res: &Residual, start: [f64; 3], search: &SearchBox) -> Option<[f64; 3]> {
    let mut x = start;
    let (mut r, mut jac) = res.eval(&x);
    let mut cost = norm2(&r);
    let mut lambda = 1e-3;
    let mut stalled = 0;
    for _ in 0..2000 {
        let j = nalgebra::Matrix4x3::from_fn(|a, b| jac[a][b]);
        let rv = nalgebra::Vector4::from_column_slice(&r);
        let a: Matrix3<f64> = j.transpose() * j;
        let g: Vector3<f64> = j.transpose() * rv;
        let mut accepted = false;
        let mut step_norm = 0.0;
        while lambda < 1e16 {
            let mut m = a;
            for i in 0..3 {
                m[(i, i)] += lambda * a[(i, i)].max(1e-300) + 1e-300;
            }
            let Some(delta) = m.lu().solve(&(-g)) else {
                lambda *= 4.0;
                continue;
            };
            let cand = [x[0] + delta[0], x[1] + delta[1], x[2] + delta[2]];
            let (rc, jc) = res.eval(&cand);
            let cc = norm2(&rc);
            if cc.is_finite() && cc <= cost {
                stalled = if cc > cost * (1.0 - 1e-6) { stalled + 1 } else { 0 };
                step_norm = delta.norm();
                x = cand;
                r = rc;
                jac = jc;
                cost = cc;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted || cost == 0.0 || stalled > 20 || !search.contains(&x, 0.5) {
            break;
        }
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if step_norm < 1e-13 * scale {
            break;
        }
    }
    let small = r.iter().all(|v| v.abs() < 1e-8);
    (small && x.iter().all(|v| v.is_finite())).then_some(x)
}

fn certify(s: &Poly, grad: &[Poly], p: &[f64; 3]) -> Option<[Rat; 3]> {
    let cand: Vec<Rat> = p.iter().map(|v| nearest_rational(*v, 16)).collect();
    if cand.iter().zip(p).any(|(c, v)| (rat_to_f64(c) - v).abs() > 1e-5) {
        return None;
    }
    let ok = s.eval_exact(&cand).is_zero() && grad.iter().all(|g| g.eval_exact(&cand).is_zero());
    ok.then(|| [cand[0].clone(), cand[1].clone(), cand[2].clone()])
}

/// Singular points of `{s = 0}` inside `search`.
///
/// Runs a damped Gauss–Newton descent on `(S, ∂S)` from a 9³ grid, keeps the
/// converged points in the box and rounds them to nearby rationals, which
/// are accepted when they are exact solutions. Results are sorted and
/// deduplicated.
pub fn singular_points(s: &Poly, search: &SearchBox) -> Vec<SingularPoint> {
    let res = Residual::new(s);
    let grad = s.gradient();
    let found: Vec<[f64; 3]> = search
        .grid(9)
        .into_par_iter()
        .filter_map(|start| descend(&res, start, search))
        .filter(|p| search.contains(p, 1e-6))
        .collect();
    let mut out: Vec<SingularPoint> = Vec::new();
    for p in found {
        let exact = certify(s, &grad, &p);
        let dup = out.iter_mut().find(|q| match (&q.exact, &exact) {
            (Some(a), Some(b)) => a == b,
            _ => (0..3).all(|i| (q.approx[i] - p[i]).abs() < 1e-9),
        });
        match dup {
            Some(q) => {
                if q.exact.is_none() && exact.is_some() {
                    q.exact = exact;
                }
            }
            None => out.push(SingularPoint { approx: p, exact }),
        }
    }
    for q in &mut out {
        if let Some(e) = &q.exact {
            q.approx = [rat_to_f64(&e[0]), rat_to_f64(&e[1]), rat_to_f64(&e[2])];
        }
    }
    out.sort_by(|a, b| {
        a.approx
            .iter()
            .zip(&b.approx)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn p(s: &str) -> Poly {
        Poly::parse(s, &["x", "y", "z"]).unwrap()
    }

    #[test]
    fn cone_vertex() {
        let pts = singular_points(&p("x^2 + y^2 - z^8"), &SearchBox::cube(4.0));
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].exact, Some([int(0), int(0), int(0)]));
    }

    #[test]
    fn two_nodes() {
        let pts = singular_points(&p("z*x^2 + y^2 - z"), &SearchBox::cube(1.0));
        let ex: Vec<_> = pts.iter().map(|s| s.exact.clone().unwrap()).collect();
        assert_eq!(ex, vec![[int(-1), int(0), int(0)], [int(1), int(0), int(0)]]);
    }

    #[test]
    fn smooth_cylinder() {
        assert!(singular_points(&p("x^2 + y^2 - 1"), &SearchBox::cube(4.0)).is_empty());
    }
}
