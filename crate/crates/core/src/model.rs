//! Problem statement, closed-form trajectories, impulses and the cost
//! functional shared by the inverse-engineering and optimal-control solvers.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{graded_breaks, integrate_panels, DEFAULT_NODES};

/// Default number of uniform sample points on `[0, T]`.
pub const DEFAULT_GRID_POINTS: usize = 1001;

/// Transport of `x' + x = u` from `x = 0` to `x = 1` over `[0, T]` with the
/// first `order` derivatives of `x` vanishing at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlProblem {
    pub horizon: f64,
    pub order: usize,
    /// Weight of the `∫v²` regularization; zero means the singular limit.
    pub lambda: f64,
}

impl ControlProblem {
    pub fn new(horizon: f64, order: usize, lambda: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        if order < 1 {
            return Err(Error::InvalidOrder {
                order,
                reason: "boundary order must be at least 1",
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                range: "[0, inf)",
            });
        }
        Ok(ControlProblem { horizon, order, lambda })
    }

    /// Unit horizon, first-order boundary conditions, no regularization.
    pub fn standard() -> Self {
        ControlProblem {
            horizon: 1.0,
            order: 1,
            lambda: 0.0,
        }
    }
}

/// State of a protocol at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    pub t: f64,
    pub x: f64,
    pub xdot: f64,
    pub u: f64,
    /// `n`-th derivative of the control (`u'` for first order).
    pub v: f64,
    /// Augmented coordinates, present for optimal-control solutions.
    pub y: Option<f64>,
    /// `z_0 … z_{n-1}` with `z_j = u^{(j)}`; empty when not applicable.
    pub z: Vec<f64>,
    /// Adjoint values in state order; empty when not applicable.
    pub p: Vec<f64>,
}

/// Closed-form evaluator behind a [`Trajectory`].
pub trait Evaluator: Send + Sync {
    fn sample(&self, t: f64) -> StateSample;

    /// `d^k x / dt^k`, exact for `k ≤ n` of the owning problem.
    fn x_derivative(&self, t: f64, k: usize) -> f64;

    /// Fastest exponential rate in the solution; drives panel grading of the
    /// cost quadrature so thin boundary layers are resolved.
    fn rate(&self) -> f64 {
        1.0
    }
}

/// Which optional columns a trajectory carries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Columns {
    pub y: bool,
    pub z: usize,
    pub p: Vec<String>,
}

/// A closed-form trajectory on `[0, horizon]`. Sampling is a view; nothing is
/// stored besides the evaluator.
#[derive(Clone)]
pub struct Trajectory {
    evaluator: Arc<dyn Evaluator>,
    horizon: f64,
    columns: Columns,
    pub grid_points: usize,
}

impl Trajectory {
    pub fn new(evaluator: Arc<dyn Evaluator>, horizon: f64, columns: Columns) -> Self {
        Trajectory {
            evaluator,
            horizon,
            columns,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn columns(&self) -> &Columns {
        &self.columns
    }

    pub fn sample(&self, t: f64) -> StateSample {
        self.evaluator.sample(t)
    }

    pub fn x_derivative(&self, t: f64, k: usize) -> f64 {
        self.evaluator.x_derivative(t, k)
    }

    pub fn rate(&self) -> f64 {
        self.evaluator.rate()
    }

    /// `points` uniform times on `[0, T]`, both ends included exactly.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        uniform_grid(self.horizon, points)
    }
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("horizon", &self.horizon)
            .field("columns", &self.columns)
            .field("grid_points", &self.grid_points)
            .finish_non_exhaustive()
    }
}

pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    let last = points - 1;
    (0..points)
        .map(|i| {
            if i == last {
                horizon
            } else {
                horizon * i as f64 / last as f64
            }
        })
        .collect()
}

/// Dirac pulse of the control, kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    pub time: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolutionKind {
    StaPolynomial,
    StaTrigonometric,
    StaExponential,
    OctSingular,
    OctRegular,
    OctHigher,
}

impl SolutionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolutionKind::StaPolynomial => "sta-poly",
            SolutionKind::StaTrigonometric => "sta-trig",
            SolutionKind::StaExponential => "sta-exp",
            SolutionKind::OctSingular => "oct-singular",
            SolutionKind::OctRegular => "oct-regular",
            SolutionKind::OctHigher => "oct-higher",
        }
    }
}

impl fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parts of `∫[x² + ẋ² + λv²]dt`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostBreakdown {
    pub state: f64,
    pub derivative: f64,
    /// Already multiplied by λ.
    pub control: f64,
}

impl CostBreakdown {
    /// `∫(x² + ẋ²)dt`, the cost without regularization.
    pub fn bare(&self) -> f64 {
        self.state + self.derivative
    }

    pub fn total(&self) -> f64 {
        self.state + self.derivative + self.control
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolSolution {
    pub problem: ControlProblem,
    pub kind: SolutionKind,
    pub coefficients: Vec<(String, f64)>,
    pub trajectory: Trajectory,
    pub impulses: Vec<Impulse>,
    /// Regularized total, equal to the bare cost when λ = 0.
    pub cost: f64,
    pub cost_breakdown: CostBreakdown,
}

impl ProtocolSolution {
    /// Integrates the cost of `trajectory` and packages the result.
    pub fn assemble(
        problem: ControlProblem,
        kind: SolutionKind,
        coefficients: Vec<(String, f64)>,
        trajectory: Trajectory,
        impulses: Vec<Impulse>,
    ) -> Result<Self> {
        let (cost, cost_breakdown) = cost_functional(&trajectory, problem.lambda, problem.horizon)?;
        Ok(ProtocolSolution {
            problem,
            kind,
            coefficients,
            trajectory,
            impulses,
            cost,
            cost_breakdown,
        })
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

/// `∫₀ᵀ [x² + ẋ² + λv²] dt` by composite Gauss–Legendre on panels graded
/// toward both ends. Impulses contribute nothing.
pub fn cost_functional(traj: &Trajectory, lambda: f64, horizon: f64) -> Result<(f64, CostBreakdown)> {
    cost_functional_with_nodes(traj, lambda, horizon, DEFAULT_NODES)
}

pub fn cost_functional_with_nodes(
    traj: &Trajectory,
    lambda: f64,
    horizon: f64,
    nodes: usize,
) -> Result<(f64, CostBreakdown)> {
    let breaks = graded_breaks(horizon, traj.rate());
    let state = integrate_panels(
        |t| {
            let x = traj.sample(t).x;
            x * x
        },
        &breaks,
        nodes,
    )?;
    let derivative = integrate_panels(
        |t| {
            let d = traj.sample(t).xdot;
            d * d
        },
        &breaks,
        nodes,
    )?;
    let control = if lambda > 0.0 {
        lambda
            * integrate_panels(
                |t| {
                    let v = traj.sample(t).v;
                    v * v
                },
                &breaks,
                nodes,
            )?
    } else {
        0.0
    };
    let b = CostBreakdown {
        state,
        derivative,
        control,
    };
    Ok((b.total(), b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResidual {
    /// Derivative order of `x`.
    pub order: usize,
    pub time: f64,
    pub target: f64,
    pub value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub residuals: Vec<BoundaryResidual>,
    pub tolerance: f64,
    pub pass: bool,
}

impl BoundaryReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Residuals of `x^{(k)}(0) = 0` and `x^{(k)}(T) = δ_{k0}` for `k = 0..=n`.
///
/// Impulses shift the first derivative: the value just inside the interval is
/// corrected by the pulse area so the outer boundary state is checked.
pub fn verify_boundaries(sol: &ProtocolSolution, tol: f64) -> BoundaryReport {
    let horizon = sol.problem.horizon;
    let traj = &sol.trajectory;
    let mut residuals = Vec::with_capacity(2 * (sol.problem.order + 1));
    for (time, end) in [(0.0, false), (horizon, true)] {
        for order in 0..=sol.problem.order {
            let mut value = traj.x_derivative(time, order);
            if order == 1 {
                for imp in sol.impulses.iter().filter(|i| i.time == time) {
                    if end {
                        value += imp.area;
                    } else {
                        value -= imp.area;
                    }
                }
            }
            let target = if end && order == 0 { 1.0 } else { 0.0 };
            let residual = (value - target).abs();
            residuals.push(BoundaryResidual {
                order,
                time,
                target,
                value,
                residual,
            });
        }
    }
    let pass = residuals.iter().all(|r| r.residual <= tol);
    BoundaryReport {
        residuals,
        tolerance: tol,
        pass,
    }
}

/// CSV with header `t,x,xdot,u,v[,y][,z0..][,p..]`, 17 significant digits,
/// LF line endings.
pub fn sample_csv(sol: &ProtocolSolution, points: usize) -> Result<String> {
    if points < 2 {
        return Err(Error::InvalidArgument("at least two sample points are required".into()));
    }
    let traj = &sol.trajectory;
    let cols = traj.columns();
    let mut out = String::from("t,x,xdot,u,v");
    if cols.y {
        out.push_str(",y");
    }
    for j in 0..cols.z {
        let _ = write!(out, ",z{j}");
    }
    for label in &cols.p {
        let _ = write!(out, ",{label}");
    }
    out.push('\n');
    for t in traj.grid(points) {
        let s = traj.sample(t);
        let mut row = vec![s.t, s.x, s.xdot, s.u, s.v];
        if cols.y {
            row.push(s.y.unwrap_or(f64::NAN));
        }
        row.extend(s.z.iter().take(cols.z));
        row.extend(s.p.iter().take(cols.p.len()));
        let line: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Scientific notation with 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        // normalize negative zero
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}
