use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    Columns, ControlProblem, Evaluator, Impulse, ProtocolSolution, SolutionKind, StateSample, Trajectory,
};

/// Bang–singular–bang optimum of the unregularized problem.
///
/// On the singular arc `y = Y e^{−t} + Z sinh t`, `z = Z eᵗ`; the opening
/// pulse puts the state at `y(0⁺) = z(0⁺) = A₁`, so `Y = Z = A₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularSolution {
    pub y: f64,
    pub z: f64,
    pub a1: f64,
    pub a2: f64,
    pub horizon: f64,
}

impl SingularSolution {
    pub fn new(horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must be positive and finite"
            )));
        }
        let a1 = 1.0 / horizon.sinh();
        Ok(SingularSolution {
            y: a1,
            z: a1,
            a1,
            a2: -1.0 / horizon.tanh(),
            horizon,
        })
    }

    /// `coth T`, the global minimum of `∫(x² + ẋ²)dt`.
    pub fn cost(&self) -> f64 {
        1.0 / self.horizon.tanh()
    }

    pub fn x(&self, t: f64) -> f64 {
        t.sinh() / self.horizon.sinh()
    }

    pub fn y_arc(&self, t: f64) -> f64 {
        self.y * (-t).exp() + self.z * t.sinh()
    }

    pub fn z_arc(&self, t: f64) -> f64 {
        self.z * t.exp()
    }
}

impl Evaluator for SingularSolution {
    fn sample(&self, t: f64) -> StateSample {
        let x = self.x(t);
        let y = t.cosh() / self.horizon.sinh();
        let z = self.z_arc(t);
        StateSample {
            t,
            x,
            xdot: y,
            u: z,
            // v = z on the singular set
            v: z,
            y: Some(y),
            z: vec![z],
            p: vec![-y, y],
        }
    }

    /// Derivatives on the open arc; the pulses are accounted for separately.
    fn x_derivative(&self, t: f64, k: usize) -> f64 {
        let s = self.horizon.sinh();
        if k.is_multiple_of(2) {
            t.sinh() / s
        } else {
            t.cosh() / s
        }
    }
}

pub fn singular_solution(horizon: f64) -> Result<ProtocolSolution> {
    let s = SingularSolution::new(horizon)?;
    let problem = ControlProblem::new(horizon, 1, 0.0)?;
    let columns = Columns {
        y: true,
        z: 1,
        p: vec!["py".into(), "pz".into()],
    };
    let coefficients = vec![
        ("Y".to_string(), s.y),
        ("Z".to_string(), s.z),
        ("A1".to_string(), s.a1),
        ("A2".to_string(), s.a2),
    ];
    let impulses = vec![
        Impulse { time: 0.0, area: s.a1 },
        Impulse {
            time: horizon,
            area: s.a2,
        },
    ];
    let trajectory = Trajectory::new(Arc::new(s), horizon, columns);
    ProtocolSolution::assemble(problem, SolutionKind::OctSingular, coefficients, trajectory, impulses)
}
