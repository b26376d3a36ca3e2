//! Pontryagin-optimal protocols: the singular bang–singular–bang optimum,
//! the energy-regularized optimum for any boundary order, and the closed
//! form for first order.

mod analytic;
mod checks;
mod lq;
mod singular;

pub use analytic::{
    equivalence_sta_regular, regular_cost_analytic, regular_order1_analytic, EquivalenceReport, Order1Closed,
    ANALYTIC_LAMBDA_FLOOR,
};
pub use checks::{adjoint_sum_max, default_window, singular_consistency_check, ArcField, ArcFit};
pub use lq::{
    build_lq, single_shooting_p0, solve_regular, solve_regular_modal, LqProblem, ModalFlow, PontryaginFlow,
    GENERIC_LAMBDA_FLOOR, SEGMENT_GROWTH,
};
pub use singular::{singular_solution, SingularSolution};
