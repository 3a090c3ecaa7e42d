#![allow(dead_code)]

use dicholin::*;

pub const LN2: f64 = std::f64::consts::LN_2;

pub fn window(a: i64, b: i64) -> Window {
    Window::new(a, b).unwrap()
}

pub fn exchange() -> Example<f64> {
    make_dimension_exchange(window(-20, 20), NormKind::L2).unwrap()
}

pub fn scalar() -> Example<f64> {
    make_scalar(0.5, window(-20, 20)).unwrap()
}

pub fn shift() -> Example<f64> {
    make_weighted_shift(&ShiftSpec::powers_of_two(window(-20, 20))).unwrap()
}

/// Letters diag(1/2, 2) and diag(1/4, 4) alternating, splitting span(e₁) ⊕ span(e₂).
pub fn family() -> Example<f64> {
    make_family_switch(&FamilySpec {
        letters: vec![
            Operator::diag(&[0.5, 2.0]).unwrap(),
            Operator::diag(&[0.25, 4.0]).unwrap(),
        ],
        lambdas: vec![LN2, 2.0 * LN2],
        projector: Projector::diag(&[true, false]),
        connector: None,
        itinerary: IndexMap::Periodic {
            pattern: vec![0, 1],
            phase: 0,
        },
        space: Space::Dense(2),
        norm: NormKind::L2,
        window: window(-20, 20),
    })
    .unwrap()
}

/// amplitude·sin(x_coord)·e_dir on ℝ^d.
pub fn sine(amplitude: f64, d: usize, coord: i64, dir: usize) -> PerturbationSequence<f64> {
    PerturbationSequence::sine(amplitude, coord, Vector::basis(d, dir), NormKind::L2)
}

pub fn problem(ex: &Example<f64>, pert: PerturbationSequence<f64>) -> ConjugacyProblem<f64> {
    ConjugacyProblem::new(ex.cert.clone(), pert, Tolerances::default()).unwrap()
}

/// The truncated fixed-point system for h on the orbit of (n, x), assembled
/// with explicit matrices and solved by damped iteration from `start`.
/// Dense systems only; slot windows mirror the solver's table layout.
pub fn oracle_h(prob: &ConjugacyProblem<f64>, n: i64, x: &[f64], start: &[Vec<f64>], damping: f64) -> Vec<f64> {
    let d = x.len();
    let nd = prob.depth as i64;
    let (lo, hi) = (n - 2 * nd - 1, n + 2 * nd);
    let seq = &prob.sys.seq;
    let mat = |k: i64| seq.at(k).to_matrix(d).unwrap();
    let pmat = |k: i64| match prob.cert.proj.at(k) {
        Projector::Dense(m) => m.clone(),
        _ => unreachable!(),
    };
    // explicit transition matrices 𝒜(m, k) by products, inverses via Lu
    let transition = |m: i64, k: i64| -> Matrix<f64> {
        let mut t = Matrix::identity(d);
        if m >= k {
            for j in k..m {
                t = mat(j).mul(&t);
            }
        } else {
            for j in (m..k).rev() {
                t = Lu::new(&mat(j)).unwrap().inverse().mul(&t);
            }
        }
        t
    };
    let len = (hi - lo + 1) as usize;
    let mut pts = vec![vec![0.0; d]; len];
    for m in lo..=hi {
        pts[(m - lo) as usize] = transition(m, n).mul_vec(x);
    }
    // precompute kernels K(m, k) = 𝒜(m,k)P_k for k ≤ m and −𝒜(m,k)(I−P_k) for k > m
    let mut kernels = vec![Vec::new(); len];
    for m in lo..=hi {
        let k_lo = (m - nd).max(lo + 1);
        let k_hi = (m + nd).min(hi + 1);
        for k in k_lo..=k_hi {
            let a = transition(m, k);
            let p = pmat(k);
            let kern = if k <= m {
                a.mul(&p)
            } else {
                let mut ip = Matrix::identity(d);
                ip = Matrix::from_rows(
                    &(0..d)
                        .map(|i| (0..d).map(|j| ip.get(i, j) - p.get(i, j)).collect())
                        .collect::<Vec<_>>(),
                )
                .unwrap();
                let neg = a.mul(&ip);
                Matrix::from_rows(
                    &(0..d)
                        .map(|i| (0..d).map(|j| -neg.get(i, j)).collect())
                        .collect::<Vec<_>>(),
                )
                .unwrap()
            };
            kernels[(m - lo) as usize].push((k, kern));
        }
    }
    let mut h: Vec<Vec<f64>> = start.to_vec();
    for _ in 0..100_000 {
        let g: Vec<Vec<f64>> = (lo..=hi)
            .map(|j| {
                let i = (j - lo) as usize;
                let arg: Vec<f64> = pts[i].iter().zip(&h[i]).map(|(a, b)| a + b).collect();
                prob.sys.pert.eval(j, &Vector::dense(arg)).as_dense().unwrap().to_vec()
            })
            .collect();
        let mut change: f64 = 0.0;
        let mut next = vec![vec![0.0; d]; len];
        for m in lo..=hi {
            let i = (m - lo) as usize;
            let mut acc = vec![0.0; d];
            for (k, kern) in &kernels[i] {
                let v = kern.mul_vec(&g[(k - 1 - lo) as usize]);
                acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
            for c in 0..d {
                next[i][c] = (1.0 - damping) * h[i][c] + damping * acc[c];
                change = change.max((next[i][c] - h[i][c]).abs());
            }
        }
        h = next;
        if change < 1e-15 {
            break;
        }
    }
    h[(n - lo) as usize].clone()
}
