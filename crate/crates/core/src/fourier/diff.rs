//! Central finite differences with Richardson extrapolation.

/// Step schedule shared by the derivative estimators.
pub const STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

fn binomial(m: u32, l: u32) -> f64 {
    (0..l).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Second-order central stencil `(offset, weight)` for the `m`-th
/// derivative with step `h`.
pub fn stencil(m: u32, h: f64) -> Vec<(f64, f64)> {
    (0..=m)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let off = (m as f64 / 2.0 - l as f64) * h;
            (off, sign * binomial(m, l) / h.powi(m as i32))
        })
        .collect()
}

/// Combines estimates at `h, h/2, h/4` (error `O(h²)`) into one.
pub fn richardson(d: [f64; 3]) -> f64 {
    let a1 = (4.0 * d[1] - d[0]) / 3.0;
    let a2 = (4.0 * d[2] - d[1]) / 3.0;
    (16.0 * a2 - a1) / 15.0
}

/// Ratio of the `x` step to the `y` step in mixed stencils. Equal steps
/// would put the `x` offsets on whole periods of an invariant function
/// sampled at `y = ±h/2`.
pub const X_STEP_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Raw mixed differences `∂^{i+j}f/∂x^i∂y^j` at each step of [`STEPS`].
pub fn mixed_raw<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, i: u32, j: u32, steps: &[f64; 3]) -> [f64; 3] {
    steps.map(|h| {
        let mut s = 0.0;
        for (dx, wx) in stencil(i, h * X_STEP_RATIO) {
            for (dy, wy) in stencil(j, h) {
                s += wx * wy * f(x + dx, y + dy);
            }
        }
        s
    })
}

/// Extrapolated mixed partial derivative.
pub fn mixed<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, i: u32, j: u32) -> f64 {
    if i + j == 0 {
        return f(x, y);
    }
    richardson(mixed_raw(f, x, y, i, j, &STEPS))
}

/// Extrapolated `m`-th derivative of a function of one variable.
pub fn deriv<F: Fn(f64) -> f64>(f: &F, x: f64, m: u32, h0: f64) -> f64 {
    if m == 0 {
        return f(x);
    }
    let d = [h0, h0 / 2.0, h0 / 4.0].map(|h| stencil(m, h).iter().map(|(o, w)| w * f(x + o)).sum());
    richardson(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_exp_sin() {
        let f = |x: f64, y: f64| x.sin() * y.exp();
        assert!((mixed(&f, 0.3, 0.2, 1, 0) - 0.3f64.cos() * 0.2f64.exp()).abs() < 1e-9);
        assert!((mixed(&f, 0.3, 0.2, 2, 1) + 0.3f64.sin() * 0.2f64.exp()).abs() < 1e-7);
        assert!((deriv(&|x: f64| x.powi(5), 1.0, 3, 1e-2) - 60.0).abs() < 1e-6);
    }
}
