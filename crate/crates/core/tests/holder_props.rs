mod common;

use common::*;
use dicholin::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn perturbation_is_holder(c in 1e-4..0.2f64, alpha in 0.05..0.95f64, n in -5i64..5, a in -3.0..3.0f64, b in -3.0..3.0f64, da in -2.0..2.0f64, db in -2.0..2.0f64) {
        let pert = sine(c, 2, 0, 0);
        let budget = HolderBudget::new(LN2, LN2, 1.0, pert.bound(), c, alpha).unwrap();
        let x = Vector::dense(vec![a, b]);
        let y = Vector::dense(vec![a + da, b + db]);
        let lhs = pert.eval(n, &x).dist(&pert.eval(n, &y), NormKind::L2);
        let rhs = budget.f_holder_constant() * x.dist(&y, NormKind::L2).powf(alpha);
        prop_assert!(lhs <= rhs * (1.0 + 1e-9));
    }

    #[test]
    fn nonlinear_flow_growth(c in 0.0..0.2f64, n in -5i64..5, steps in 0u32..=10, a in -2.0..2.0f64, b in -2.0..2.0f64, da in -0.5..0.5f64, db in -0.5..0.5f64) {
        let sys = NonlinearSystem::new(exchange().cert.seq, sine(c, 2, 0, 0), NormKind::L2).unwrap();
        let x = Vector::dense(vec![a, b]);
        let y = Vector::dense(vec![a + da, b + db]);
        let dxy = x.dist(&y, NormKind::L2);
        let k = n + steps as i64;
        let fwd = sys.forward(k, n, &x).unwrap().dist(&sys.forward(k, n, &y).unwrap(), NormKind::L2);
        prop_assert!(fwd <= forward_lipschitz(sys.rho, c, steps) * dxy * (1.0 + 1e-9) + 1e-12);
        if steps > 0 {
            let tol = 1e-13;
            let m = n - steps as i64;
            let back = sys.backward(m, n, &x, tol).unwrap().dist(&sys.backward(m, n, &y, tol).unwrap(), NormKind::L2);
            prop_assert!(back <= backward_lipschitz(sys.rho, c, steps) * dxy * (1.0 + 1e-9) + 1e-9);
        }
    }

    #[test]
    fn smallness_is_monotone_in_c(alpha in 0.05..0.95f64, c in 1e-8..1.0f64, shrink in 0.0..1.0f64, m in 0.0..3.0f64) {
        let pass = |c: f64| holder_smallness(&HolderBudget::new(LN2, LN2, 1.0, m, c, alpha).unwrap()).passed;
        if pass(c) {
            prop_assert!(pass(c * shrink));
        }
    }
}

#[test]
fn identity_conjugacy_has_unit_slope() {
    let prob = problem(&exchange(), PerturbationSequence::zero());
    let est = empirical_holder(
        &prob,
        0,
        &Vector::dense(vec![0.5, 0.5]),
        &[1e-1, 1e-2, 1e-3],
        &HolderSampling {
            pairs_per_scale: 8,
            radius: 1.0,
            seed: 1,
        },
    )
    .unwrap();
    assert!((est.slope - 1.0).abs() <= 0.02, "{est:?}");
}

#[test]
fn scalar_conjugacy_is_nearly_lipschitz() {
    let prob = scalar_problem(0.05);
    let est = empirical_holder(
        &prob,
        0,
        &Vector::dense(vec![0.3]),
        &[1e-1, 1e-2, 1e-3],
        &HolderSampling {
            pairs_per_scale: 8,
            radius: 1.0,
            seed: 2,
        },
    )
    .unwrap();
    assert!(est.slope >= 0.9, "{est:?}");
}

#[test]
fn exchange_slope_meets_certified_exponent() {
    let c = 1e-4;
    let prob = exchange_problem(c);
    let budget = HolderBudget::from_problem(&prob, 0.5).unwrap();
    assert!(holder_smallness(&budget).passed);
    let est = empirical_holder(
        &prob,
        -2,
        &Vector::dense(vec![1.0, -0.5]),
        &[1e-1, 1e-2, 1e-3],
        &HolderSampling {
            pairs_per_scale: 8,
            radius: 1.0,
            seed: 3,
        },
    )
    .unwrap();
    assert!(est.slope >= 0.9 * 0.5, "{est:?}");
}

#[test]
fn noise_floor_drops_small_scales() {
    let prob = exchange_problem(0.02);
    let est = empirical_holder(
        &prob,
        0,
        &Vector::dense(vec![0.1, 0.1]),
        &[1e-1, 1e-2, 1e-12],
        &HolderSampling {
            pairs_per_scale: 3,
            radius: 0.5,
            seed: 5,
        },
    )
    .unwrap();
    assert_eq!(est.rows.len(), 2);
    assert_eq!(est.warnings.len(), 1);
}
