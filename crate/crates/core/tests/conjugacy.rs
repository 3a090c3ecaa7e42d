mod common;

use common::*;
use dicholin::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn trivial_perturbation_gives_identity() {
    let prob = problem(&exchange(), PerturbationSequence::zero());
    let x = Vector::dense(vec![0.7, -1.1]);
    let h = prob.solve_h(-3, &x).unwrap();
    assert!(h.value.is_zero());
    assert_eq!(h.iterations, 1);
    assert!(prob.solve_hbar(-3, &x).unwrap().value.is_zero());
    assert_eq!(prob.conjugacy_residual(-3, &x).unwrap().value, 0.0);
    let inv = prob.inverse_residual(-3, &x).unwrap();
    assert_eq!((inv.r1.value, inv.r2.value), (0.0, 0.0));
    assert_eq!(prob.range_check(-1, &x).unwrap(), RangeDistance::Distance(0.0));
}

#[test]
fn scalar_fixed_point_at_origin() {
    let prob = scalar_problem(0.05);
    let h = prob.solve_h(0, &Vector::zeros(1)).unwrap();
    assert_eq!(h.value.get(0), 0.0);
    assert_eq!(prob.solve_hbar(0, &Vector::zeros(1)).unwrap().value.get(0), 0.0);
}

#[test]
fn scalar_composition_returns_to_start() {
    let prob = scalar_problem(0.05);
    let x = Vector::dense(vec![1.0]);
    let inv = prob.inverse_residual(0, &x).unwrap();
    assert!(inv.r1.within() && inv.r2.within(), "{inv:?}");
    let r = prob.conjugacy_residual(0, &x).unwrap();
    assert!(r.value <= 4.0 * prob.h_err_bound(), "{r:?}");
}

#[test]
fn exchange_h_stays_in_stable_direction_at_minus_one() {
    let prob = exchange_problem(0.02);
    let x = Vector::dense(vec![1.0, 1.0]);
    let h = prob.solve_h(-1, &x).unwrap();
    assert!(h.value.get(1).abs() <= 1e-10, "{:?}", h.value);
    let r = prob.conjugacy_residual(-1, &x).unwrap();
    assert!(r.value <= h.err_bound, "{r:?}");
    let d = prob.range_check(-1, &x).unwrap().value().unwrap();
    assert!(d <= 1e-10);
    assert_eq!(prob.range_check(-5, &x).unwrap(), RangeDistance::Distance(0.0));
}

#[test]
fn exchange_batch_residuals() {
    let prob = exchange_problem(0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(-10..=10);
        let x = Vector::dense(vec![rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4)]);
        let r = prob.conjugacy_residual(n, &x).unwrap();
        assert!(r.value <= 4.0 * prob.h_err_bound() && r.within(), "n={n} {r:?}");
        let inv = prob.inverse_residual(n, &x).unwrap();
        assert!(inv.r1.within() && inv.r2.within(), "n={n} {inv:?}");
    }
}

#[test]
fn refuses_large_perturbation_and_unverified_certificates() {
    let err = ConjugacyProblem::new(exchange().cert, sine(0.4, 2, 0, 0), Tolerances::default()).unwrap_err();
    match err {
        Error::Smallness { q, c_star } => {
            assert!((q - 1.2).abs() < 1e-12 && (c_star - 1.0 / 3.0).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
    let mut cert = exchange().cert;
    cert.report.passed = false;
    assert!(matches!(
        ConjugacyProblem::new(cert, sine(0.01, 2, 0, 0), Tolerances::default()),
        Err(Error::NotVerified(_))
    ));
}

#[test]
fn orbit_overflow_is_reported() {
    let prob = exchange_problem(0.02);
    let err = prob.solve_h(0, &Vector::dense(vec![1e140, 0.0])).unwrap_err();
    assert!(
        matches!(
            err,
            Error::OrbitOverflow {
                direction: "backward",
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn matches_scalar_oracle_with_depth_eight() {
    let prob = scalar_problem(0.05).with_depth(8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for x in [0.0, 0.3, 1.0, -1.7] {
        let ours = prob.solve_h(0, &Vector::dense(vec![x])).unwrap().value.get(0);
        let len = 4 * 8 + 2;
        for _ in 0..3 {
            let start: Vec<Vec<f64>> = (0..len).map(|_| vec![rng.gen_range(-0.5..0.5)]).collect();
            let theirs = oracle_h(&prob, 0, &[x], &start, 0.7)[0];
            assert!((ours - theirs).abs() < 1e-9, "x={x}: {ours} vs {theirs}");
        }
    }
}

#[test]
fn matches_planar_oracle_with_depth_eight() {
    let prob = exchange_problem(0.02).with_depth(8);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..4 {
        let n = rng.gen_range(-6..=6);
        let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let ours = prob.solve_h(n, &Vector::dense(x.clone())).unwrap().value;
        let start: Vec<Vec<f64>> = (0..34)
            .map(|_| vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect();
        let theirs = oracle_h(&prob, n, &x, &start, 0.6);
        for (c, t) in theirs.iter().enumerate() {
            assert!((ours.get(c as i64) - t).abs() < 1e-9);
        }
    }
}

#[test]
fn solver_runs_on_weighted_shift() {
    let ex = make_weighted_shift(&ShiftSpec::powers_of_two(window(-20, 20))).unwrap();
    let pert = PerturbationSequence::sine(0.02, 0, Vector::delta(0), NormKind::L2);
    let prob = problem(&ex, pert);
    let x = Vector::sparse([(-1, 0.4), (0, 1.0), (2, -0.3)]);
    let r = prob.conjugacy_residual(0, &x).unwrap();
    assert!(r.within(), "{r:?}");
    let inv = prob.inverse_residual(0, &x).unwrap();
    assert!(inv.r1.within() && inv.r2.within(), "{inv:?}");
    assert!(prob.range_check(0, &x).unwrap().value().unwrap() <= 1e-10);
}
