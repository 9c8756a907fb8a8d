mod common;

use aitv::aitv::isotropic_subgradient;
use aitv::field::ScalarField;
use aitv::pdhg::{self, PdhglsParams, Subproblem};

fn tight() -> PdhglsParams {
    PdhglsParams { inner_tol: 1e-12, max_inner_iters: 20_000, ..PdhglsParams::default() }
}

#[test]
fn matches_dual_oracle_on_random_subproblems() {
    let mut rng = common::rng(11);
    for case in 0..20 {
        let sub = common::random_subproblem(&mut rng, 16, 16, case % 2 == 1);
        let start = common::uniform_field(&mut rng, 16, 16, 0.0, 1.0);
        let sol = pdhg::solve(&sub, &start, &tight()).unwrap();
        let reference = common::dual_fista(&sub, 1e-10, 200_000);
        let (got, want) = (sub.objective(&sol.u), sub.objective(&reference));
        assert!(got <= want + 1e-5 * want.abs().max(1.0), "case {case}: {got} vs {want}");
    }
}

#[test]
fn safeguarded_solve_never_increases_the_objective() {
    let mut rng = common::rng(12);
    for case in 0..20 {
        let sub = common::random_subproblem(&mut rng, 12, 12, case % 2 == 0);
        let start = common::binary_field(&mut rng, 12, 12);
        let params = PdhglsParams { max_inner_iters: 5 + case * 3, ..PdhglsParams::default() };
        let sol = pdhg::solve(&sub, &start, &params).unwrap();
        let diff: f64 = sol.u.as_slice().iter().zip(start.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        let before = sub.objective(&start);
        let after = sub.objective(&sol.u);
        assert!(after <= before - sub.strong_convexity() * diff + 1e-12 * before.abs().max(1.0));
        if sol.reverted {
            assert_eq!(sol.u, start);
        }
    }
}

#[test]
fn plain_rule_returns_last_iterate() {
    let mut rng = common::rng(13);
    let sub = common::random_subproblem(&mut rng, 10, 10, false);
    let start = common::uniform_field(&mut rng, 10, 10, 0.0, 1.0);
    let params = PdhglsParams { safeguard: false, max_inner_iters: 3, ..PdhglsParams::default() };
    let sol = pdhg::solve(&sub, &start, &params).unwrap();
    assert_eq!(sol.iterations, 3);
    assert!(!sol.reverted);
    assert!(sol.u.is_in_unit_box());
    assert_ne!(sol.u, start);
}

#[test]
fn warm_start_at_a_solution_stops_early() {
    let mut rng = common::rng(14);
    let sub = common::random_subproblem(&mut rng, 12, 12, true);
    let start = common::uniform_field(&mut rng, 12, 12, 0.0, 1.0);
    let cold = pdhg::solve(&sub, &start, &tight()).unwrap();
    let params = PdhglsParams { inner_tol: 1e-6, ..tight() };
    let warm = pdhg::solve_warm(&sub, &cold.u, &cold.p, &params).unwrap();
    assert!(warm.converged);
    assert!(warm.iterations < cold.iterations / 4, "{} vs {}", warm.iterations, cold.iterations);
}

#[test]
fn warm_start_rejects_infeasible_dual() {
    let mut rng = common::rng(15);
    let sub = common::random_subproblem(&mut rng, 4, 4, false);
    let start = ScalarField::filled(4, 4, 0.5);
    let mut p = aitv::field::GradientField::zeros(4, 4);
    p.x.set(0, 0, 1.5);
    assert!(pdhg::solve_warm(&sub, &start, &p, &PdhglsParams::default()).is_err());
}

#[test]
fn subgradient_is_inert_without_alpha() {
    let mut rng = common::rng(16);
    let linear = common::uniform_field(&mut rng, 8, 8, -1.0, 1.0);
    let anchor = common::uniform_field(&mut rng, 8, 8, 0.0, 1.0);
    let a = Subproblem::new(
        linear.clone(),
        anchor.clone(),
        isotropic_subgradient(&common::binary_field(&mut rng, 8, 8)),
        0.0,
        0.1,
    )
    .unwrap();
    let b = Subproblem::new(linear, anchor.clone(), isotropic_subgradient(&anchor), 0.0, 0.1).unwrap();
    let sa = pdhg::solve(&a, &anchor, &tight()).unwrap();
    let sb = pdhg::solve(&b, &anchor, &tight()).unwrap();
    assert_eq!(sa.u, sb.u);
    for _ in 0..5 {
        let u = common::uniform_field(&mut rng, 8, 8, 0.0, 1.0);
        assert_eq!(a.objective(&u), b.objective(&u));
    }
}

#[test]
fn rejects_bad_parameters() {
    let mut rng = common::rng(17);
    let sub = common::random_subproblem(&mut rng, 4, 4, false);
    let start = ScalarField::filled(4, 4, 0.5);
    for params in [
        PdhglsParams { tau0: 0.0, ..PdhglsParams::default() },
        PdhglsParams { delta: 1.0, ..PdhglsParams::default() },
        PdhglsParams { mu: 0.0, ..PdhglsParams::default() },
        PdhglsParams { max_inner_iters: 0, ..PdhglsParams::default() },
    ] {
        assert!(pdhg::solve(&sub, &start, &params).is_err());
    }
    assert!(pdhg::solve(&sub, &ScalarField::filled(4, 4, 1.5), &PdhglsParams::default()).is_err());
}
