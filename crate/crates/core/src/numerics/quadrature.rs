//! Gauss–Legendre quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default rule size used for cost functionals.
pub const DEFAULT_NODES: usize = 64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// ordered by increasing node.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// `∫_a^b f(t) dt` with the `nodes`-point Gauss–Legendre rule.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("interval [{a}, {b}] is empty")));
    }
    if nodes < 2 {
        return Err(Error::InvalidArgument("quadrature needs at least two nodes".into()));
    }
    let (x, w) = gauss_legendre(nodes);
    rule_sum(&f, a, b, &x, &w)
}

/// Composite rule over consecutive panels `[breaks[i], breaks[i+1]]`.
pub fn integrate_panels(f: impl Fn(f64) -> f64, breaks: &[f64], nodes: usize) -> Result<f64> {
    if breaks.len() < 2 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("panel breakpoints must increase".into()));
    }
    if nodes < 2 {
        return Err(Error::InvalidArgument("quadrature needs at least two nodes".into()));
    }
    let (x, w) = gauss_legendre(nodes);
    breaks.windows(2).map(|p| rule_sum(&f, p[0], p[1], &x, &w)).sum()
}

fn rule_sum(f: &impl Fn(f64) -> f64, a: f64, b: f64, x: &[f64], w: &[f64]) -> Result<f64> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let t = mid + half * xi;
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { t });
        }
        acc += wi * v;
    }
    Ok(acc * half)
}

/// Panel breakpoints on `[0, horizon]` graded geometrically toward both ends
/// so that boundary layers of width `1/rate` are resolved.
pub fn graded_breaks(horizon: f64, rate: f64) -> Vec<f64> {
    let half = 0.5 * horizon;
    if !(rate * horizon > 8.0) {
        return vec![0.0, horizon];
    }
    let mut left = vec![0.0];
    let mut h = 1.0 / rate;
    while h < 0.75 * half {
        left.push(h);
        h *= 2.0;
    }
    left.push(half);
    let mut breaks = left.clone();
    for &b in left.iter().rev().skip(1) {
        breaks.push(horizon - b);
    }
    breaks
}

/// `∫₀ᵀ e^{ρt − c} dt`, arranged so no intermediate overflows when the
/// result is representable.
pub fn exponential_integral(rho: f64, c: f64, t: f64) -> f64 {
    if rho == 0.0 {
        t * (-c).exp()
    } else if rho > 0.0 {
        (rho * t - c).exp() * (-(-rho * t).exp_m1()) / rho
    } else {
        (-c).exp() * (-(rho * t).exp_m1()) / (-rho)
    }
}
