use lincontrol::model::{format_real, verify_boundaries};
use lincontrol::numerics::{mat_exp, solve_linear, Matrix};
use lincontrol::oct::{build_lq, regular_order1_analytic, Order1Closed};
use lincontrol::sta::{build_exponential, build_polynomial, build_trigonometric, solve_family, FamilyKind};
use lincontrol::ControlProblem;
use proptest::prelude::*;

fn square(n: usize, range: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-range..range, n * n).prop_map(move |v| Matrix::from_vec(n, n, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_solve_has_small_residual(
        a in (2usize..7).prop_flat_map(|n| (square(n, 1.0), prop::collection::vec(-1.0..1.0f64, n))),
    ) {
        let (mut m, b) = a;
        let n = m.rows();
        for i in 0..n {
            m[(i, i)] += n as f64;
        }
        let x = solve_linear(&m, &b).unwrap();
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            prop_assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_is_a_semigroup(a in square(4, 1.25), s in 0.0..1.0f64, t in 0.0..1.0f64) {
        // entries below 1.25 keep the ∞-norm at most 5
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = mat_exp(&a, s).unwrap().matmul(&mat_exp(&a, t).unwrap());
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-9);
    }

    #[test]
    fn exponential_family_meets_boundaries_for_any_rate(k in 2.0..2000.0f64, horizon in 0.2..3.0f64) {
        let fam = build_exponential(k, horizon).unwrap();
        prop_assert!(fam.boundary_residual(&fam.offset) <= 1e-10);
    }

    #[test]
    fn family_costs_never_beat_the_optimum(n in 3usize..=6, trig in any::<bool>()) {
        let kind = if trig { FamilyKind::Trigonometric(n) } else { FamilyKind::Polynomial(n) };
        let s = solve_family(kind, &ControlProblem::standard()).unwrap();
        prop_assert!(s.cost >= 1.0 / 1f64.tanh() - 1e-6);
    }

    #[test]
    fn regularized_optimum_meets_boundaries(log_lambda in -11.0..-0.1f64) {
        let lambda = 10f64.powf(log_lambda);
        let s = regular_order1_analytic(lambda, 1.0).unwrap();
        prop_assert!(verify_boundaries(&s, 1e-9).pass);
        prop_assert!(s.cost_breakdown.bare() >= 1.0 / 1f64.tanh() - 1e-6);
        let c = Order1Closed::new(lambda, 1.0).unwrap();
        prop_assert!(c.regularized_cost() >= s.cost_breakdown.bare());
    }

    #[test]
    fn hamiltonian_spectrum_is_paired(n in 1usize..=3, log_lambda in -8.0..-0.5f64) {
        let lambda = 10f64.powf(log_lambda);
        let h = build_lq(n, lambda, 1.0).unwrap().hamiltonian();
        let mu = lincontrol::numerics::eigenvalues(&h).unwrap();
        prop_assert!(lincontrol::numerics::pairing_residual(&mu) <= 1e-9);
    }

    #[test]
    fn reals_round_trip_through_text(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let back: f64 = format_real(v).parse().unwrap();
        prop_assert_eq!(back, if v == 0.0 { 0.0 } else { v });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eliminated_constraints_hold_for_any_free_parameters(
        n in 3usize..=6,
        free in prop::collection::vec(-20.0..20.0f64, 3),
    ) {
        for fam in [build_polynomial(n, 1.0).unwrap(), build_trigonometric(n, 1.0).unwrap()] {
            let coeffs = fam.coefficients(&free[..fam.free_dim]);
            prop_assert!(fam.boundary_residual(&coeffs) <= 1e-10, "{:?}", fam.kind);
        }
    }
}
