//! Generic linear-quadratic formulation and its Pontryagin boundary-value
//! problem for any boundary order `n`.
//!
//! State ordering is `(x_n, z_{n−1}, …, z_1, z_0)` with `z_j = u^{(j)}` and
//! `x_j = x^{(j)}`, so `z_j` sits at index `n − j`. The control is
//! `v = u^{(n)}`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Columns, ControlProblem, Evaluator, ProtocolSolution, SolutionKind, StateSample, Trajectory};
use crate::numerics::{
    balance, complex_solve, eigendecompose, eigenvalues, mat_exp, BandedMatrix, ComplexSpectrum, Lu, Matrix,
};

/// Smallest accepted `λ^{1/n}` for the generic solver.
pub const GENERIC_LAMBDA_FLOOR: f64 = 1e-6;
/// Segment length is chosen so that `ρ(H)·T/m` stays below this.
pub const SEGMENT_GROWTH: f64 = 2.0;
const MAX_SEGMENTS: usize = 1 << 16;

/// `ẋ = Ax + Bv`, cost `∫(xᵀWx + U v²)dt`, `x(0) = x0`, `x(T) = xf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqProblem {
    pub order: usize,
    pub a: Matrix,
    pub b: Vec<f64>,
    pub w: Matrix,
    pub u: f64,
    pub x0: Vec<f64>,
    pub xf: Vec<f64>,
    pub horizon: f64,
    /// Row giving `x₁ = ẋ` from the state.
    pub r1: Vec<f64>,
    /// Row giving `x = z₀ − x₁` from the state.
    pub r0: Vec<f64>,
}

pub fn build_lq(n: usize, lambda: f64, horizon: f64) -> Result<LqProblem> {
    if n < 1 {
        return Err(Error::InvalidOrder {
            order: n,
            reason: "boundary order must be at least 1",
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::LambdaOutOfRange {
            lambda,
            range: "(0, inf)",
        });
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be positive and finite"
        )));
    }
    let d = n + 1;
    let mut a = Matrix::zeros(d, d);
    a[(0, 0)] = -1.0;
    for j in 0..n.saturating_sub(1) {
        // ż_j = z_{j+1}
        a[(n - j, n - j - 1)] = 1.0;
    }
    let mut b = vec![0.0; d];
    b[0] = 1.0;
    b[1] = 1.0;
    // x₁ = z₁ − z₂ + z₃ − ⋯ + (−1)ⁿ z_{n−1} − (−1)ⁿ x_n
    let mut r1 = vec![0.0; d];
    for j in 1..n {
        r1[n - j] = if j % 2 == 1 { 1.0 } else { -1.0 };
    }
    r1[0] = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut r0: Vec<f64> = r1.iter().map(|v| -v).collect();
    r0[n] += 1.0;
    let w = Matrix::from_fn(d, d, |i, j| r0[i] * r0[j] + r1[i] * r1[j]);
    let mut xf = vec![0.0; d];
    xf[n] = 1.0;
    Ok(LqProblem {
        order: n,
        a,
        b,
        w,
        u: lambda,
        x0: vec![0.0; d],
        xf,
        horizon,
        r1,
        r0,
    })
}

impl LqProblem {
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn lambda(&self) -> f64 {
        self.u
    }

    /// `[[A, BBᵀ/U], [W, −Aᵀ]]`.
    pub fn hamiltonian(&self) -> Matrix {
        let d = self.dim();
        Matrix::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
            (true, true) => self.a[(i, j)],
            (true, false) => self.b[i] * self.b[j - d] / self.u,
            (false, true) => self.w[(i - d, j)],
            (false, false) => -self.a[(j - d, i - d)],
        })
    }

    /// `xᵀWx`.
    pub fn running_cost(&self, state: &[f64]) -> f64 {
        let wx = self.w.mul_vec(state);
        state.iter().zip(&wx).map(|(a, b)| a * b).sum()
    }

    /// `(x, x₁, …, x_n)` from a state vector.
    pub fn x_derivatives(&self, state: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut xs = vec![0.0; n + 1];
        xs[n] = state[0];
        for j in (0..n).rev() {
            xs[j] = state[n - j] - xs[j + 1];
        }
        xs
    }

    fn adjoint_labels(&self) -> Vec<String> {
        let n = self.order;
        if n == 1 {
            return vec!["py".into(), "pz".into()];
        }
        let mut labels = vec![format!("px{n}")];
        labels.extend((0..n).rev().map(|j| format!("pz{j}")));
        labels
    }

    fn check_floor(&self) -> Result<()> {
        let floor = GENERIC_LAMBDA_FLOOR.powi(self.order as i32);
        if self.u < floor {
            return Err(Error::LambdaBelowFloor { lambda: self.u, floor });
        }
        Ok(())
    }
}

/// `T = diag(S, S⁻ᵀ)` and its inverse, where `S` maps `(x_n, z_{n−1}, …, z_0)`
/// to `(x_n, x_{n−1}, …, x_0)` through `x_j = z_j − x_{j+1}`. In these
/// coordinates the flow is far closer to normal, which keeps the segment
/// propagators accurate. All entries are `0` or `±1`, so the transform is
/// exact.
fn derivative_coordinates(d: usize) -> (Matrix, Matrix) {
    let sign = |i: usize, k: usize| if (i - k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let s = Matrix::from_fn(d, d, |i, k| if k <= i { sign(i, k) } else { 0.0 });
    let s_inv = Matrix::from_fn(d, d, |i, k| if k == i || k + 1 == i { 1.0 } else { 0.0 });
    let tr = Matrix::from_fn(2 * d, 2 * d, |i, k| match (i < d, k < d) {
        (true, true) => s[(i, k)],
        (false, false) => s_inv[(k - d, i - d)],
        _ => 0.0,
    });
    let tr_inv = Matrix::from_fn(2 * d, 2 * d, |i, k| match (i < d, k < d) {
        (true, true) => s_inv[(i, k)],
        (false, false) => s[(k - d, i - d)],
        _ => 0.0,
    });
    (tr, tr_inv)
}

/// Hamiltonian flow with the boundary-value problem solved.
#[derive(Debug, Clone)]
pub struct PontryaginFlow {
    pub h: Matrix,
    /// `D⁻¹(THT⁻¹)D` with power-of-two `D`, where `T` maps to derivative
    /// coordinates.
    pub h_balanced: Matrix,
    /// `T⁻¹`, back to `(x_n, z_{n−1}, …, z_0, p)`.
    transform_inv: Matrix,
    pub scaling: Vec<f64>,
    pub spectral_radius: f64,
    pub horizon: f64,
    pub segments: usize,
    /// Balanced node states `D⁻¹X(sT/m)`, `s = 0..=m`.
    nodes: Vec<Vec<f64>>,
    /// `(p(0))` in state order.
    pub p0: Vec<f64>,
}

impl PontryaginFlow {
    /// Solves the two-point problem by multiple shooting over `m` equal
    /// segments, each propagated with the matrix exponential.
    pub fn shoot(problem: &LqProblem) -> Result<Self> {
        let h = problem.hamiltonian();
        let (tr, tr_inv) = derivative_coordinates(problem.dim());
        let (hb, scaling) = balance(&tr.matmul(&h).matmul(&tr_inv));
        let x0 = tr.mul_vec(&[problem.x0.clone(), vec![0.0; problem.dim()]].concat());
        let xf = tr.mul_vec(&[problem.xf.clone(), vec![0.0; problem.dim()]].concat());
        let spectral_radius = eigenvalues(&h)?.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let t = problem.horizon;
        let mut m = 1usize;
        while spectral_radius * t / m as f64 > SEGMENT_GROWTH {
            m *= 2;
            if m > MAX_SEGMENTS {
                return Err(Error::Overflow);
            }
        }
        let step = t / m as f64;
        let phi = mat_exp(&hb, step)?;
        let d = problem.dim();
        let dd = 2 * d;
        let size = dd * (m + 1);
        let mut sys = BandedMatrix::zeros(size, 3 * d - 1, d);
        let mut rhs = vec![0.0; size];
        for i in 0..d {
            sys.set(i, i, scaling[i]);
            rhs[i] = x0[i];
        }
        for s in 0..m {
            for i in 0..dd {
                let row = d + s * dd + i;
                for j in 0..dd {
                    let v = phi[(i, j)];
                    if v != 0.0 {
                        sys.set(row, s * dd + j, v);
                    }
                }
                sys.set(row, (s + 1) * dd + i, -1.0);
            }
        }
        for i in 0..d {
            let row = d + m * dd + i;
            sys.set(row, m * dd + i, scaling[i]);
            rhs[row] = xf[i];
        }
        let singular = |e| match e {
            Error::SingularMatrix { .. } => Error::ShootingSingular,
            other => other,
        };
        let mut sol = sys.clone().solve(&rhs).map_err(singular)?;
        // one step of iterative refinement
        let resid: Vec<f64> = sys.mul_vec(&sol).iter().zip(&rhs).map(|(a, b)| b - a).collect();
        let delta = sys.solve(&resid).map_err(singular)?;
        for (s, d) in sol.iter_mut().zip(delta) {
            *s += d;
        }
        let nodes: Vec<Vec<f64>> = sol.chunks(dd).map(<[f64]>::to_vec).collect();
        let start: Vec<f64> = nodes[0].iter().zip(&scaling).map(|(x, s)| x * s).collect();
        let p0 = tr_inv.mul_vec(&start)[d..].to_vec();
        Ok(PontryaginFlow {
            h,
            h_balanced: hb,
            transform_inv: tr_inv,
            scaling,
            spectral_radius,
            horizon: t,
            segments: m,
            nodes,
            p0,
        })
    }

    /// Full `(state, adjoint)` vector at `t`.
    pub fn state(&self, t: f64) -> Result<Vec<f64>> {
        let m = self.segments;
        let step = self.horizon / m as f64;
        let pos = (t / step).max(0.0);
        let mut s = pos.floor() as usize;
        let mut tau = t - s as f64 * step;
        if s >= m {
            // propagate into T rather than reading the pinned final node
            s = m - 1;
            tau = t - s as f64 * step;
        }
        let node = &self.nodes[s];
        let xt = if tau <= 0.0 {
            node.clone()
        } else {
            mat_exp(&self.h_balanced, tau)?.mul_vec(node)
        };
        let scaled: Vec<f64> = xt.iter().zip(&self.scaling).map(|(x, d)| x * d).collect();
        Ok(self.transform_inv.mul_vec(&scaled))
    }

    /// `e^{Ht}`, unsegmented; overflows for stiff flows over long times.
    pub fn propagator(&self, t: f64) -> Result<Matrix> {
        mat_exp(&self.h, t)
    }
}

/// `p(0)` from one solve on the adjoint-to-state block of `e^{HT}`.
///
/// Only usable while `e^{HT}` is representable and well conditioned; the
/// segmented solver covers the stiff range.
pub fn single_shooting_p0(problem: &LqProblem) -> Result<Vec<f64>> {
    let d = problem.dim();
    let n = mat_exp(&problem.hamiltonian(), problem.horizon)?;
    let block = n.block(0, d, d, d);
    let known = n.block(0, 0, d, d).mul_vec(&problem.x0);
    let target: Vec<f64> = problem.xf.iter().zip(&known).map(|(a, b)| a - b).collect();
    Lu::factor(&block).map_err(|_| Error::ShootingSingular)?.solve(&target)
}

/// Modal representation `X(t) = Re Σ cⱼ vⱼ e^{μⱼ(t − aⱼ)}`, each mode
/// anchored where it is largest so no term grows across the interval.
#[derive(Debug, Clone)]
pub struct ModalFlow {
    pub spectrum: ComplexSpectrum,
    anchors: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl ModalFlow {
    pub fn solve(problem: &LqProblem) -> Result<Self> {
        let h = problem.hamiltonian();
        let spectrum = eigendecompose(&h)?;
        let t = problem.horizon;
        let anchors: Vec<f64> = spectrum
            .values
            .iter()
            .map(|mu| if mu.re > 0.0 { t } else { 0.0 })
            .collect();
        let d = problem.dim();
        let dd = 2 * d;
        let mut a = vec![vec![Complex64::new(0.0, 0.0); dd]; dd];
        let mut rhs = vec![Complex64::new(0.0, 0.0); dd];
        for (j, (mu, v)) in spectrum.values.iter().zip(&spectrum.vectors).enumerate() {
            let at0 = (mu * (0.0 - anchors[j])).exp();
            let at_t = (mu * (t - anchors[j])).exp();
            for i in 0..d {
                a[i][j] = v[i] * at0;
                a[d + i][j] = v[i] * at_t;
            }
        }
        for i in 0..d {
            rhs[i] = Complex64::new(problem.x0[i], 0.0);
            rhs[d + i] = Complex64::new(problem.xf[i], 0.0);
        }
        let coeffs = complex_solve(a, &rhs).map_err(|_| Error::ShootingSingular)?;
        Ok(ModalFlow {
            spectrum,
            anchors,
            coeffs,
        })
    }

    pub fn state(&self, t: f64) -> Vec<f64> {
        let dd = self.coeffs.len();
        let mut out = vec![0.0; dd];
        for (j, (mu, v)) in self.spectrum.values.iter().zip(&self.spectrum.vectors).enumerate() {
            let f = self.coeffs[j] * (mu * (t - self.anchors[j])).exp();
            for (o, vi) in out.iter_mut().zip(v) {
                *o += (f * vi).re;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Flow {
    Shooting(PontryaginFlow),
    Modal(ModalFlow),
}

/// Samples an LQ solution from either flow representation.
struct LqEvaluator {
    problem: LqProblem,
    flow: Flow,
    rate: f64,
}

impl LqEvaluator {
    fn full_state(&self, t: f64) -> Vec<f64> {
        match &self.flow {
            Flow::Shooting(f) => f.state(t).unwrap_or_else(|_| vec![f64::NAN; 2 * self.problem.dim()]),
            Flow::Modal(f) => f.state(t),
        }
    }
}

impl Evaluator for LqEvaluator {
    fn sample(&self, t: f64) -> StateSample {
        let d = self.problem.dim();
        let n = self.problem.order;
        let full = self.full_state(t);
        let (state, p) = full.split_at(d);
        let xs = self.problem.x_derivatives(state);
        let v = self.problem.b.iter().zip(p).map(|(b, q)| b * q).sum::<f64>() / self.problem.u;
        StateSample {
            t,
            x: xs[0],
            xdot: xs[1],
            u: state[n],
            v,
            y: Some(xs[1]),
            z: (0..n).map(|j| state[n - j]).collect(),
            p: p.to_vec(),
        }
    }

    /// Exact for `k ≤ n + 1`; higher orders are not available from the state.
    fn x_derivative(&self, t: f64, k: usize) -> f64 {
        let d = self.problem.dim();
        let n = self.problem.order;
        let full = self.full_state(t);
        let xs = self.problem.x_derivatives(&full[..d]);
        if k <= n {
            xs[k]
        } else if k == n + 1 {
            let v = self.problem.b.iter().zip(&full[d..]).map(|(b, q)| b * q).sum::<f64>() / self.problem.u;
            v - xs[n]
        } else {
            f64::NAN
        }
    }

    fn rate(&self) -> f64 {
        self.rate
    }
}

fn package(problem: &LqProblem, flow: Flow, rate: f64, p0: Vec<f64>) -> Result<ProtocolSolution> {
    let control = ControlProblem::new(problem.horizon, problem.order, problem.u)?;
    let labels = problem.adjoint_labels();
    let columns = Columns {
        y: true,
        z: problem.order,
        p: labels.clone(),
    };
    let coefficients = labels.iter().map(|l| format!("{l}(0)")).zip(p0).collect();
    let kind = if problem.order == 1 {
        SolutionKind::OctRegular
    } else {
        SolutionKind::OctHigher
    };
    let evaluator = LqEvaluator {
        problem: problem.clone(),
        flow,
        rate,
    };
    let trajectory = Trajectory::new(Arc::new(evaluator), problem.horizon, columns);
    ProtocolSolution::assemble(control, kind, coefficients, trajectory, vec![])
}

/// Regularized optimum via the segmented Hamiltonian flow.
pub fn solve_regular(problem: &LqProblem) -> Result<ProtocolSolution> {
    problem.check_floor()?;
    let flow = PontryaginFlow::shoot(problem)?;
    let rate = flow.spectral_radius;
    let p0 = flow.p0.clone();
    package(problem, Flow::Shooting(flow), rate, p0)
}

/// Same optimum from the eigendecomposition of the Hamiltonian matrix; used
/// as an independent cross-check of [`solve_regular`].
pub fn solve_regular_modal(problem: &LqProblem) -> Result<ProtocolSolution> {
    problem.check_floor()?;
    let flow = ModalFlow::solve(problem)?;
    let rate = flow.spectrum.spectral_radius();
    let d = problem.dim();
    let p0 = flow.state(0.0)[d..].to_vec();
    package(problem, Flow::Modal(flow), rate, p0)
}
