use dicholin::*;

#[test]
fn single_precision_pipeline() {
    let w = Window::new(-10, 10).unwrap();
    let ex = make_dimension_exchange::<f32>(w, NormKind::L2).unwrap();
    assert!(ex.cert.is_verified());
    let pert = PerturbationSequence::sine(0.02f32, 0, Vector::basis(2, 0), NormKind::L2);
    let tol = Tolerances {
        tail_tol: 1e-5f32,
        iter_tol: 1e-5,
        inv_tol: 1e-6,
    };
    let prob = ConjugacyProblem::new(ex.cert, pert, tol).unwrap();
    let x = Vector::dense(vec![1.0f32, 1.0]);
    let r = prob.conjugacy_residual(-1, &x).unwrap();
    assert!(r.value <= 1e-4, "{r:?}");
    assert!(prob.solve_h(-1, &x).unwrap().value.get(1).abs() <= 1e-6);
}
