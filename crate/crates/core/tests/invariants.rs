use lincontrol::model::{uniform_grid, Evaluator};
use lincontrol::numerics::eigendecompose;
use lincontrol::oct::{build_lq, regular_order1_analytic, singular_solution, solve_regular, SingularSolution};
use lincontrol::report::cost_node_doubling_gap;
use lincontrol::sta::{
    assemble_gram, build_exponential, build_polynomial, build_trigonometric, solve_family, AnsatzFamily, FamilyKind,
};
use lincontrol::ControlProblem;

fn coth1() -> f64 {
    1.0 / 1f64.tanh()
}

#[test]
fn spectra_reconstruct_hamiltonians() {
    for (n, lam) in [
        (1, 0.25),
        (1, 1e-2),
        (1, 1e-4),
        (1, 1e-5),
        (2, 1e-3),
        (2, 5e-7),
        (3, 1e-4),
        (3, 5e-9),
    ] {
        let h = build_lq(n, lam, 1.0).unwrap().hamiltonian();
        let back = eigendecompose(&h).unwrap().reconstruct().unwrap();
        let err = h.sub(&back).max_abs();
        assert!(err <= 1e-9 * h.max_abs(), "n = {n}, λ = {lam}: {err:e}");
    }
}

#[test]
fn costs_stable_under_node_doubling() {
    let mut sols = vec![singular_solution(1.0).unwrap()];
    for kind in [
        FamilyKind::Polynomial(3),
        FamilyKind::Polynomial(6),
        FamilyKind::Trigonometric(4),
        FamilyKind::Exponential(100.0),
    ] {
        sols.push(solve_family(kind, &ControlProblem::standard()).unwrap());
    }
    for lam in [1e-2, 1e-4, 2e-6] {
        sols.push(regular_order1_analytic(lam, 1.0).unwrap());
    }
    for s in &sols {
        let gap = cost_node_doubling_gap(s).unwrap();
        assert!(gap <= 1e-9, "{:?}: {gap:e}", s.kind);
    }
}

#[test]
fn singular_velocity_is_derivative_of_position() {
    let s = SingularSolution::new(1.0).unwrap();
    let h = 1e-3;
    for t in uniform_grid(1.0, 101).into_iter().filter(|t| *t > 0.01 && *t < 0.99) {
        let y = s.sample(t).xdot;
        assert!((y - t.cosh() / 1f64.sinh()).abs() < 1e-15);
        assert!((s.x_derivative(t, 1) - y).abs() < 1e-12);
        // fourth-order central difference
        let fd = (-s.x(t + 2.0 * h) + 8.0 * s.x(t + h) - 8.0 * s.x(t - h) + s.x(t - 2.0 * h)) / (12.0 * h);
        assert!((fd - y).abs() < 1e-12, "t = {t}");
    }
}

fn families() -> Vec<AnsatzFamily> {
    let mut out = Vec::new();
    for n in 4..=6 {
        out.push(build_polynomial(n, 1.0).unwrap());
        out.push(build_trigonometric(n, 1.0).unwrap());
    }
    out
}

#[test]
fn perturbing_the_minimizer_never_lowers_cost() {
    for fam in families() {
        let form = assemble_gram(&fam, 0.0).unwrap();
        let p = form.minimize().unwrap();
        let best = form.cost(&p);
        for i in 0..p.len() {
            for d in [-1e-3, 1e-3] {
                let mut q = p.clone();
                q[i] += d;
                assert!(form.cost(&q) >= best, "{:?} coordinate {i}", fam.kind);
            }
        }
    }
}

#[test]
fn costs_improve_with_basis_size() {
    for make in [
        FamilyKind::Polynomial as fn(usize) -> FamilyKind,
        FamilyKind::Trigonometric,
    ] {
        let costs: Vec<f64> = (3..=6)
            .map(|n| solve_family(make(n), &ControlProblem::standard()).unwrap().cost)
            .collect();
        assert!(costs.windows(2).all(|w| w[0] >= w[1]), "{costs:?}");
    }
}

#[test]
fn exponential_family_converges_to_optimum() {
    let costs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|l: &f64| {
            let k = 1.0 / l.sqrt();
            solve_family(FamilyKind::Exponential(k), &ControlProblem::standard())
                .unwrap()
                .cost
        })
        .collect();
    assert!(costs.windows(2).all(|w| w[1] < w[0]), "{costs:?}");
    assert!(costs[2] <= 1.326 && costs[2] >= coth1());
    assert!(build_exponential(100.0, 1.0).is_ok());
}

#[test]
fn regularized_cost_dominates_bare_cost() {
    for (n, lam) in [(1, 1e-2), (1, 1e-4), (2, 1e-4), (2, 5e-7), (3, 1e-5), (3, 5e-9)] {
        let s = solve_regular(&build_lq(n, lam, 1.0).unwrap()).unwrap();
        let bare = s.cost_breakdown.bare();
        assert!(bare >= coth1(), "n = {n}, λ = {lam}: {bare}");
        assert!(s.cost >= bare, "n = {n}, λ = {lam}");
    }
}

#[test]
fn control_reconstructed_from_state_equals_first_auxiliary() {
    for (n, lam) in [(1, 1e-4), (2, 5e-7), (3, 5e-9)] {
        let s = solve_regular(&build_lq(n, lam, 1.0).unwrap()).unwrap();
        for t in uniform_grid(1.0, 201) {
            let v = s.trajectory.sample(t);
            assert!((v.xdot + v.x - v.z[0]).abs() <= 1e-9, "n = {n}, t = {t}");
        }
    }
}
