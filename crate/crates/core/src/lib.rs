//! Control protocols for the damped system `x' + x = u` driven from rest at
//! `x = 0` to rest at `x = 1`.
//!
//! Two families are implemented and cross-checked: inverse-engineered
//! trajectories over fixed bases ([`sta`]) and Pontryagin-optimal solutions
//! ([`oct`]), both singular and energy-regularized.

// Negated comparisons are used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod model;
pub mod numerics;
pub mod oct;
pub mod report;
pub mod sta;

pub use error::{Error, Result};
pub use model::{ControlProblem, CostBreakdown, Impulse, ProtocolSolution, SolutionKind, StateSample, Trajectory};
pub use numerics::Matrix;
