//! Closed-form regularized optimum for first-order boundary conditions.
//!
//! With `k = 1/√λ` every quantity is a combination of `e^{−t}`, `eᵗ`,
//! `e^{−kt}` and `e^{kt}`. The growing factor `e^{kT}` is divided out of the
//! prefactor and the coefficients analytically, leaving the basis
//! `e^{−t}, eᵗ, e^{−kt}, e^{k(t−T)}`, all bounded on `[0, T]`, so nothing
//! overflows however small λ is.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Columns, ControlProblem, Evaluator, ProtocolSolution, SolutionKind, StateSample, Trajectory};
use crate::numerics::exponential_integral;
use crate::sta::build_exponential;

/// Smallest λ accepted by the closed form.
pub const ANALYTIC_LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order1Closed {
    pub lambda: f64,
    pub horizon: f64,
    /// `1/√λ`.
    pub k: f64,
    /// Prefactor multiplied by `e^{kT}`.
    pub prefactor: f64,
    /// `y₁…y₄` with the factor `e^{kT}` removed from the first three.
    pub y: [f64; 4],
}

impl Order1Closed {
    pub fn new(lambda: f64, horizon: f64) -> Result<Self> {
        if !(ANALYTIC_LAMBDA_FLOOR..1.0).contains(&lambda) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                range: "[1e-12, 1)",
            });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        let s = lambda.sqrt();
        let k = 1.0 / s;
        let e = horizon.exp();
        let ei = 1.0 / e;
        let q = (-k * horizon).exp();
        let det = (1.0 - s).powi(2) * ei * q * q - (1.0 + s).powi(2) * ei - (1.0 + s).powi(2) * e * q * q
            + (1.0 - s).powi(2) * e
            + 8.0 * s * q;
        let y = [
            -2.0 * e * q + (1.0 - k) * q * q + (1.0 + k),
            2.0 * ei * q - (1.0 + k) * q * q - (1.0 - k),
            -(1.0 - k) * ei * q + (1.0 + k) * e * q - 2.0 * k,
            -(1.0 + k) * ei + (1.0 - k) * e + 2.0 * k * q,
        ];
        Ok(Order1Closed {
            lambda,
            horizon,
            k,
            prefactor: s / det,
            y,
        })
    }

    fn rates(&self) -> [f64; 4] {
        [-1.0, 1.0, -self.k, self.k]
    }

    fn anchors(&self) -> [f64; 4] {
        [0.0, 0.0, 0.0, self.horizon]
    }

    fn basis(&self, t: f64) -> [f64; 4] {
        let r = self.rates();
        let a = self.anchors();
        [0, 1, 2, 3].map(|i| (r[i] * (t - a[i])).exp())
    }

    /// Coefficient rows of `x, y = ẋ, z = u, v, p_y, p_z` over the basis,
    /// before the common prefactor.
    pub fn rows(&self) -> [[f64; 4]; 6] {
        let [y1, y2, y3, y4] = self.y;
        let s = self.lambda.sqrt();
        let (k, lam) = (self.k, self.lambda);
        [
            [-y1, y2, -s * y3, s * y4],
            [y1, y2, y3, y4],
            [0.0, 2.0 * y2, (1.0 - s) * y3, (1.0 + s) * y4],
            [0.0, 2.0 * y2, (1.0 - k) * y3, (1.0 + k) * y4],
            [-y1, -(1.0 - 2.0 * lam) * y2, -s * y3, s * y4],
            [y1, y2, lam * y3, lam * y4],
        ]
    }

    fn combine(&self, row: &[f64; 4], t: f64, derivative: usize) -> f64 {
        let b = self.basis(t);
        let r = self.rates();
        self.prefactor
            * (0..4)
                .map(|i| row[i] * r[i].powi(derivative as i32) * b[i])
                .sum::<f64>()
    }

    pub fn x(&self, t: f64) -> f64 {
        self.combine(&self.rows()[0], t, 0)
    }

    /// `(p_y(0), p_z(0))` from the direct closed form of the initial adjoint.
    pub fn initial_adjoint(&self) -> (f64, f64) {
        let (t, k, lam) = (self.horizon, self.k, self.lambda);
        let ei = (-t).exp();
        let e = t.exp();
        let q = (-k * t).exp();
        let alpha = 2.0 * (1.0 - lam) * self.prefactor;
        let py = alpha * (-2.0 * ei * q + (1.0 + k) * q * q + (1.0 - k));
        let pz = alpha * (ei * q - e * q - k * q * q + k);
        (py, pz)
    }

    /// Exact `∫[x² + ẋ² + λv²]dt` from the pairwise exponential integrals.
    pub fn regularized_cost(&self) -> f64 {
        let [y1, y2, y3, y4] = self.y;
        let s = self.lambda.sqrt();
        let lam = self.lambda;
        let r = self.rates();
        let a = self.anchors();
        let int = |i: usize, j: usize| exponential_integral(r[i] + r[j], r[i] * a[i] + r[j] * a[j], self.horizon);
        let diag = 2.0 * y1 * y1 * int(0, 0)
            + 2.0 * (1.0 + 2.0 * lam) * y2 * y2 * int(1, 1)
            + 2.0 * (1.0 - s + lam) * y3 * y3 * int(2, 2)
            + 2.0 * (1.0 + s + lam) * y4 * y4 * int(3, 3);
        let cross = (1.0 + s) * y1 * y3 * int(0, 2)
            + (1.0 - s) * y1 * y4 * int(0, 3)
            + (1.0 - s) * (1.0 - 2.0 * s) * y2 * y3 * int(1, 2)
            + (1.0 + s) * (1.0 + 2.0 * s) * y2 * y4 * int(1, 3);
        self.prefactor * self.prefactor * (diag + 2.0 * cross)
    }
}

impl Evaluator for Order1Closed {
    fn sample(&self, t: f64) -> StateSample {
        let rows = self.rows();
        let [x, y, z, v, py, pz] = rows.map(|r| self.combine(&r, t, 0));
        StateSample {
            t,
            x,
            xdot: y,
            u: z,
            v,
            y: Some(y),
            z: vec![z],
            p: vec![py, pz],
        }
    }

    fn x_derivative(&self, t: f64, k: usize) -> f64 {
        self.combine(&self.rows()[0], t, k)
    }

    fn rate(&self) -> f64 {
        self.k
    }
}

/// Regularized first-order optimum from the closed form.
pub fn regular_order1_analytic(lambda: f64, horizon: f64) -> Result<ProtocolSolution> {
    let c = Order1Closed::new(lambda, horizon)?;
    let problem = ControlProblem::new(horizon, 1, lambda)?;
    let (py0, pz0) = c.initial_adjoint();
    let mut coefficients = vec![
        ("prefactor_scaled".to_string(), c.prefactor),
        ("y1".to_string(), c.y[0]),
        ("y2".to_string(), c.y[1]),
        ("y3".to_string(), c.y[2]),
        ("y4".to_string(), c.y[3]),
    ];
    coefficients.push(("py(0)".to_string(), py0));
    coefficients.push(("pz(0)".to_string(), pz0));
    let columns = Columns {
        y: true,
        z: 1,
        p: vec!["py".into(), "pz".into()],
    };
    let trajectory = Trajectory::new(Arc::new(c), horizon, columns);
    ProtocolSolution::assemble(problem, SolutionKind::OctRegular, coefficients, trajectory, vec![])
}

/// Closed-form `C_R(λ)`.
pub fn regular_cost_analytic(lambda: f64, horizon: f64) -> Result<f64> {
    let c = Order1Closed::new(lambda, horizon)?.regularized_cost();
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::Overflow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub lambda: f64,
    /// `max |x_exp(t) − x_reg(t)|` over the sampling grid.
    pub max_gap: f64,
    /// Relative residuals of `b = 𝔞x₁`, `a = 𝔞x₂`, `d = 𝔞x₃`, `c = 𝔞x₄`.
    pub identity_residuals: [f64; 4],
}

impl EquivalenceReport {
    pub fn max_identity_residual(&self) -> f64 {
        self.identity_residuals.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Compares the exponential basis family at `k = 1/√λ` with the regularized
/// optimum at the same λ.
pub fn equivalence_sta_regular(lambda: f64, horizon: f64, points: usize) -> Result<EquivalenceReport> {
    let reg = Order1Closed::new(lambda, horizon)?;
    let fam = build_exponential(reg.k, horizon)?;
    // fam.offset = (a, b, c·e^{kT}, d) over (eᵗ, e⁻ᵗ, e^{k(t−T)}, e^{−kt})
    let h = &fam.offset;
    let xrow = reg.rows()[0].map(|v| v * reg.prefactor);
    let pairs = [(h[1], xrow[0]), (h[0], xrow[1]), (h[3], xrow[2]), (h[2], xrow[3])];
    let identity_residuals = pairs.map(|(sta, opt)| {
        let scale = sta.abs().max(opt.abs());
        if scale == 0.0 {
            0.0
        } else {
            (sta - opt).abs() / scale
        }
    });
    let max_gap = crate::model::uniform_grid(horizon, points)
        .into_iter()
        .map(|t| (fam.x_derivative(h, t, 0) - reg.x(t)).abs())
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        lambda,
        max_gap,
        identity_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::verify_boundaries;

    #[test]
    fn boundary_conditions_hold() {
        for lam in [0.5, 1e-2, 1e-4, 1e-8, 1e-12] {
            let sol = regular_order1_analytic(lam, 1.0).unwrap();
            let r = verify_boundaries(&sol, 1e-9);
            assert!(r.pass, "λ = {lam}: {r:?}");
        }
    }

    #[test]
    fn initial_adjoint_matches_rows() {
        for lam in [0.3, 1e-2, 1e-4, 1e-7] {
            let c = Order1Closed::new(lam, 1.0).unwrap();
            let (py, pz) = c.initial_adjoint();
            let s = c.sample(0.0);
            assert!((py - s.p[0]).abs() < 1e-10 * (1.0 + py.abs()), "λ = {lam}");
            assert!((pz - s.p[1]).abs() < 1e-10 * (1.0 + pz.abs()), "λ = {lam}");
        }
    }

    #[test]
    fn reference_values() {
        let c = Order1Closed::new(1e-4, 1.0).unwrap();
        let (py, pz) = c.initial_adjoint();
        assert!((py + 0.864952473166).abs() < 1e-10);
        assert!((pz - 0.873689366834).abs() < 1e-10);
        assert!((c.x(0.5) - 0.4454680261640485).abs() < 1e-13);
        assert!((c.regularized_cost() - 1.33790553494).abs() < 1e-10);
    }

    #[test]
    fn closed_cost_matches_quadrature() {
        for lam in [0.2, 1e-2, 1e-4, 2e-6] {
            let sol = regular_order1_analytic(lam, 1.0).unwrap();
            let exact = regular_cost_analytic(lam, 1.0).unwrap();
            assert!((sol.cost - exact).abs() < 1e-8, "λ = {lam}: {} vs {exact}", sol.cost);
        }
    }

    #[test]
    fn range_is_enforced() {
        for lam in [0.0, -1e-3, 1.0, 2.0, 1e-13] {
            assert!(matches!(
                Order1Closed::new(lam, 1.0),
                Err(Error::LambdaOutOfRange { .. })
            ));
        }
    }
}
