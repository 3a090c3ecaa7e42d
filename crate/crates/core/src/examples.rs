//! Ready-made systems with verified dichotomy certificates.

use crate::cocycle::{IndexMap, OperatorSequence, Window};
use crate::dichotomy::{
    check_full_orbit_bounded, DichotomyCertificate, OrbitCheck, Probes, ProjectionFamily, Projector,
};
use crate::error::{Error, Result};
use crate::linops::{IndexSet, NormKind, Operator, Space, Vector, WeightRule};
use crate::scalar::Real;

/// A generated system. `nominal_lambda` is the textbook rate when it differs
/// from the certified one.
#[derive(Clone, Debug)]
pub struct Example<T> {
    pub cert: DichotomyCertificate<T>,
    /// Nonzero x₀ whose full orbit is bounded, if the generator knows one.
    pub witness: Option<Vector<T>>,
    pub nominal_lambda: T,
}

fn certify<T: Real>(
    seq: OperatorSequence<T>,
    proj: ProjectionFamily<T>,
    window: Window,
    d: T,
    lambda: T,
    norm: NormKind,
) -> Result<DichotomyCertificate<T>> {
    let cert = DichotomyCertificate::verify(seq, proj, window, d, lambda, norm, &Probes::default())?;
    cert.require_verified()?;
    Ok(cert)
}

/// Declared bounds for a bilateral weighted shift.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSpec<T> {
    pub weights: WeightRule<T>,
    /// sup |ω_n| over n ≤ crossing; must be < 1.
    pub stable_bound: T,
    /// inf |ω_n| over n ≥ crossing + 2; must be > 1. `None` means E^u = {0}
    /// and the stable bound then covers every n.
    pub unstable_bound: Option<T>,
    pub crossing: i64,
    pub norm: NormKind,
    pub window: Window,
}

impl<T: Real> ShiftSpec<T> {
    /// ω_n = 1/2 for n ≤ 0 and 2 for n ≥ 1.
    pub fn powers_of_two(window: Window) -> Self {
        ShiftSpec {
            weights: WeightRule::Step {
                crossing: 0,
                at_or_below: T::lit(0.5),
                above: T::lit(2.0),
            },
            stable_bound: T::lit(0.5),
            unstable_bound: Some(T::lit(2.0)),
            crossing: 0,
            norm: NormKind::L2,
            window,
        }
    }
}

/// sup |ω_n| over n ≤ k.
fn sup_at_most<T: Real>(w: &WeightRule<T>, k: i64) -> T {
    match w {
        WeightRule::Constant(a) => a.abs(),
        WeightRule::Step {
            crossing,
            at_or_below,
            above,
        } => {
            if k <= *crossing {
                at_or_below.abs()
            } else {
                at_or_below.abs().max(above.abs())
            }
        }
        WeightRule::Windowed {
            start,
            values,
            before,
            after,
        } => {
            let mut s = before.abs();
            for (i, v) in values.iter().enumerate() {
                if start + i as i64 <= k {
                    s = s.max(v.abs());
                }
            }
            if k >= start + values.len() as i64 {
                s = s.max(after.abs());
            }
            s
        }
    }
}

/// inf |ω_n| over n ≥ k.
fn inf_at_least<T: Real>(w: &WeightRule<T>, k: i64) -> T {
    match w {
        WeightRule::Constant(a) => a.abs(),
        WeightRule::Step {
            crossing,
            at_or_below,
            above,
        } => {
            if k > *crossing {
                above.abs()
            } else {
                at_or_below.abs().min(above.abs())
            }
        }
        WeightRule::Windowed {
            start,
            values,
            before,
            after,
        } => {
            let mut s = after.abs();
            for (i, v) in values.iter().enumerate() {
                if start + i as i64 >= k {
                    s = s.min(v.abs());
                }
            }
            if k < *start {
                s = s.min(before.abs());
            }
            s
        }
    }
}

/// Constant A_n = S_ω with P_n keeping the indices ≤ crossing; D = 1.
pub fn make_weighted_shift<T: Real>(spec: &ShiftSpec<T>) -> Result<Example<T>> {
    let op = Operator::weighted_shift(spec.weights.clone())?;
    let s = spec.stable_bound;
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::Invalid(format!("stable bound must lie in (0, 1), got {s}")));
    }
    let (set, lambda) = match spec.unstable_bound {
        Some(u) => {
            if !(u > T::one() && u.is_finite()) {
                return Err(Error::Invalid(format!("unstable bound must exceed 1, got {u}")));
            }
            let inf = inf_at_least(&spec.weights, spec.crossing + 2);
            if inf < u {
                return Err(Error::Rule(format!(
                    "inf |ω_n| over n ≥ {} is {inf}, below the declared {u}",
                    spec.crossing + 2
                )));
            }
            (IndexSet::at_most(spec.crossing), (-s.ln()).min(u.ln()))
        }
        None => (IndexSet::all(), -s.ln()),
    };
    let sup = match spec.unstable_bound {
        Some(_) => sup_at_most(&spec.weights, spec.crossing),
        None => spec.weights.sup_abs(),
    };
    if sup > s {
        return Err(Error::Rule(format!(
            "sup |ω_n| on the stable side is {sup}, above the declared {s}"
        )));
    }
    let seq = OperatorSequence::constant(op, Space::Sparse)?;
    let proj = ProjectionFamily::constant(Projector::coordinates(set));
    let cert = certify(seq, proj, spec.window, T::one(), lambda, spec.norm)?;
    let witness = spec.unstable_bound.map(|_| Vector::delta(spec.crossing));
    Ok(Example {
        cert,
        witness,
        nominal_lambda: lambda,
    })
}

/// A_n = diag(1/2, 2) for n < 0 and diag(1/2, 1/2) for n ≥ 0; S(n) = span(e₁)
/// for n < 0 and ℝ² afterwards. D = 1, λ = ln 2, witness e₂.
pub fn make_dimension_exchange<T: Real>(window: Window, norm: NormKind) -> Result<Example<T>> {
    let half = T::lit(0.5);
    let seq = OperatorSequence::windowed(
        -1,
        vec![Operator::diag(&[half, T::lit(2.0)])?, Operator::diag(&[half, half])?],
        Space::Dense(2),
    )?;
    let proj = ProjectionFamily::windowed(
        -1,
        vec![Projector::diag(&[true, false]), Projector::diag(&[true, true])],
    )?;
    let lambda = T::lit(2.0).ln();
    Ok(Example {
        cert: certify(seq, proj, window, T::one(), lambda, norm)?,
        witness: Some(Vector::basis(2, 1)),
        nominal_lambda: lambda,
    })
}

/// The scalar contraction A_n ≡ a with P ≡ 1; D = 1, λ = −ln|a|.
pub fn make_scalar<T: Real>(a: T, window: Window) -> Result<Example<T>> {
    if !(a.abs() > T::zero() && a.abs() < T::one()) {
        return Err(Error::Invalid(format!("scalar system needs 0 < |a| < 1, got {a}")));
    }
    let seq = OperatorSequence::constant(Operator::scaled_identity(a)?, Space::Dense(1))?;
    let proj = ProjectionFamily::constant(Projector::diag(&[true]));
    let lambda = -a.abs().ln();
    Ok(Example {
        cert: certify(seq, proj, window, T::one(), lambda, NormKind::L2)?,
        witness: None,
        nominal_lambda: lambda,
    })
}

/// Letters sharing one splitting, an optional connector U and an itinerary
/// over letters 0..k (letter k is U when present).
#[derive(Clone, Debug)]
pub struct FamilySpec<T> {
    pub letters: Vec<Operator<T>>,
    /// Decay rate of each letter (with D = 1).
    pub lambdas: Vec<T>,
    pub projector: Projector<T>,
    pub connector: Option<Operator<T>>,
    pub itinerary: IndexMap,
    pub space: Space,
    pub norm: NormKind,
    pub window: Window,
}

/// Switches between generalized hyperbolic letters along an itinerary.
///
/// Without a connector: D = 1, λ = min λ_i. With a connector U the textbook
/// rate λ̃ − max(log‖U‖, log‖U⁻¹‖) only holds per UT pair, so the certificate
/// uses half of it and D = max(1, max(‖U‖, ‖U⁻¹‖)·e^λ) to absorb an unpaired U.
pub fn make_family_switch<T: Real>(spec: &FamilySpec<T>) -> Result<Example<T>> {
    let k = spec.letters.len();
    if k == 0 || spec.lambdas.len() != k {
        return Err(Error::Invalid("need one λ per letter and at least one letter".into()));
    }
    if spec.lambdas.iter().any(|l| !(*l > T::zero())) {
        return Err(Error::Invalid("letter rates must be positive".into()));
    }
    let p = spec.norm;
    let probes = Probes::default();
    let proj = ProjectionFamily::constant(spec.projector.clone());
    proj.check_space(spec.space)?;
    let lambda_min = spec.lambdas.iter().copied().fold(T::infinity(), T::min);

    let mut alphabet = spec.letters.clone();
    let (nominal, lambda, d) = match &spec.connector {
        None => (lambda_min, lambda_min, T::one()),
        Some(u) => {
            if let Some(n) = spec.itinerary.first_repeat_of(k) {
                return Err(Error::Rule(format!(
                    "connector U sits at consecutive indices {n} and {}; U must never appear in pairs",
                    n + 1
                )));
            }
            let (un, ui) = (u.operator_norm(p)?, u.inverse_norm(p)?);
            let cap = lambda_min.exp();
            if !(un < cap && ui < cap) {
                return Err(Error::Rule(format!(
                    "need ‖U‖ < e^λ̃ and ‖U⁻¹‖ < e^λ̃ (= {cap}), got ‖U‖ = {un}, ‖U⁻¹‖ = {ui}"
                )));
            }
            check_connector_inclusions(u, &spec.projector, spec.space, &probes, p)?;
            let nominal = lambda_min - un.ln().max(ui.ln());
            let lambda = nominal / T::lit(2.0);
            let d = T::one().max(un.max(ui) * lambda.exp());
            alphabet.push(u.clone());
            (nominal, lambda, d)
        }
    };
    let seq = OperatorSequence::itinerary(alphabet, spec.itinerary.clone(), spec.space)?;
    Ok(Example {
        cert: certify(seq, proj, spec.window, d, lambda, p)?,
        witness: None,
        nominal_lambda: nominal,
    })
}

/// U(E^s) ⊂ E^s and U⁻¹(E^u) ⊂ E^u, checked on probe vectors.
fn check_connector_inclusions<T: Real>(
    u: &Operator<T>,
    proj: &Projector<T>,
    space: Space,
    probes: &Probes,
    p: NormKind,
) -> Result<()> {
    for v in probes.vectors::<T>(space, p) {
        let s = proj.apply(&v);
        let us = u.apply(&s)?;
        if proj.apply_complement(&us).norm(p) > T::lit(1e-10) * (T::one() + s.norm(p)) {
            return Err(Error::Rule("connector violates U(E^s) ⊂ E^s".into()));
        }
        let w = proj.apply_complement(&v);
        let uw = u.apply_inverse(&w)?;
        if proj.apply(&uw).norm(p) > T::lit(1e-10) * (T::one() + w.norm(p)) {
            return Err(Error::Rule("connector violates U⁻¹(E^u) ⊂ E^u".into()));
        }
    }
    Ok(())
}

/// The alternative conjugacy H'_n(x) = x + x_n built from a bounded orbit.
#[derive(Clone, Debug)]
pub struct NonuniquenessWitness<T> {
    pub seq: OperatorSequence<T>,
    pub window: Window,
    /// x_n = 𝒜(n, 0) x₀ on the window.
    pub orbit: Vec<Vector<T>>,
    pub norm: NormKind,
}

impl<T: Real> NonuniquenessWitness<T> {
    pub fn shift(&self, n: i64) -> Option<&Vector<T>> {
        self.window
            .contains(n)
            .then(|| &self.orbit[(n - self.window.start) as usize])
    }

    /// H'_n(x).
    pub fn eval(&self, n: i64, x: &Vector<T>) -> Option<Vector<T>> {
        self.shift(n).map(|s| x.add(s))
    }

    /// sup_n ‖H'_n − Id‖ = sup_n ‖x_n‖.
    pub fn sup_shift(&self) -> T {
        self.orbit.iter().map(|v| v.norm(self.norm)).fold(T::zero(), T::max)
    }

    /// ‖H'_{n+1}(A_n x) − A_n H'_n(x)‖ for f = 0; needs n, n + 1 in the window.
    pub fn residual(&self, n: i64, x: &Vector<T>) -> Result<T> {
        let (Some(a), Some(b)) = (self.eval(n, x), self.shift(n + 1)) else {
            return Err(Error::Invalid(format!(
                "times {n}, {} must lie in the witness window",
                n + 1
            )));
        };
        let lhs = self.seq.transition(n + 1, n, x)?.add(b);
        let rhs = self.seq.transition(n + 1, n, &a)?;
        Ok(lhs.dist(&rhs, self.norm))
    }
}

pub fn make_nonuniqueness_witness<T: Real>(
    seq: &OperatorSequence<T>,
    x0: &Vector<T>,
    window: Window,
    bound: T,
    norm: NormKind,
) -> Result<NonuniquenessWitness<T>> {
    match check_full_orbit_bounded(seq, x0, window, bound, norm)? {
        OrbitCheck::Bounded { orbit, .. } => Ok(NonuniquenessWitness {
            seq: seq.clone(),
            window,
            orbit: orbit.into_iter().map(|(_, v)| v).collect(),
            norm,
        }),
        OrbitCheck::NoDecay { .. } => Err(Error::Rule(
            "orbit tails do not decay; boundedness beyond the window is not established".into(),
        )),
        OrbitCheck::Unbounded { first_exit } => Err(Error::UnboundedOrbit { time: first_exit }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::Matrix;

    fn w(a: i64, b: i64) -> Window {
        Window::new(a, b).unwrap()
    }

    #[test]
    fn shift_examples() {
        let ex = make_weighted_shift::<f64>(&ShiftSpec::powers_of_two(w(-20, 20))).unwrap();
        assert_eq!(ex.cert.d, 1.0);
        assert!((ex.cert.lambda - 2f64.ln()).abs() < 1e-15);
        // S(E^u) is not inside E^u
        let img = ex.cert.seq.at(0).apply(&Vector::delta(1)).unwrap();
        assert_eq!(img, Vector::sparse([(0, 2.0)]));

        let contraction = ShiftSpec {
            weights: WeightRule::Constant(0.5),
            stable_bound: 0.5,
            unstable_bound: None,
            crossing: 0,
            norm: NormKind::L2,
            window: w(-20, 20),
        };
        let ex = make_weighted_shift(&contraction).unwrap();
        assert!((ex.cert.lambda - 2f64.ln()).abs() < 1e-15 && ex.witness.is_none());
    }

    #[test]
    fn shift_rejects_wrong_bounds() {
        let mut spec = ShiftSpec::<f64>::powers_of_two(w(-5, 5));
        spec.stable_bound = 0.4;
        assert!(matches!(make_weighted_shift(&spec), Err(Error::Rule(_))));
        let mut spec = ShiftSpec::<f64>::powers_of_two(w(-5, 5));
        spec.unstable_bound = Some(3.0);
        assert!(matches!(make_weighted_shift(&spec), Err(Error::Rule(_))));
    }

    #[test]
    fn exchange_witness() {
        let ex = make_dimension_exchange::<f64>(w(-20, 20), NormKind::L2).unwrap();
        let wit = make_nonuniqueness_witness(
            &ex.cert.seq,
            &ex.witness.unwrap(),
            w(-30, 30),
            1.0 + 1e-12,
            NormKind::L2,
        )
        .unwrap();
        assert_eq!(wit.sup_shift(), 1.0);
        let x = Vector::dense(vec![0.3, -1.7]);
        for n in -29..29 {
            assert_eq!(wit.residual(n, &x).unwrap(), 0.0);
        }
        assert!(make_nonuniqueness_witness(&ex.cert.seq, &Vector::zeros(2), w(-5, 5), 1.0, NormKind::L2).is_err());
    }

    fn two_letters() -> FamilySpec<f64> {
        FamilySpec {
            letters: vec![
                Operator::diag(&[1.0 / 3.0, 3.0]).unwrap(),
                Operator::diag(&[0.5, 2.0]).unwrap(),
            ],
            lambdas: vec![3f64.ln(), 2f64.ln()],
            projector: Projector::diag(&[true, false]),
            connector: None,
            itinerary: IndexMap::Periodic {
                pattern: vec![0, 1],
                phase: 0,
            },
            space: Space::Dense(2),
            norm: NormKind::L2,
            window: w(-20, 20),
        }
    }

    #[test]
    fn family_examples() {
        let ex = make_family_switch(&two_letters()).unwrap();
        assert_eq!(ex.cert.d, 1.0);
        assert!((ex.cert.lambda - 2f64.ln()).abs() < 1e-15);

        let mut spec = two_letters();
        spec.connector = Some(Operator::diag(&[1.2, 1.0 / 1.2]).unwrap());
        spec.itinerary = IndexMap::Periodic {
            pattern: vec![0, 2, 1, 2],
            phase: 0,
        };
        let ex = make_family_switch(&spec).unwrap();
        let nominal = 2f64.ln() - 1.2f64.ln();
        assert!((ex.nominal_lambda - nominal).abs() < 1e-12);
        assert!((ex.cert.lambda - nominal / 2.0).abs() < 1e-12);

        spec.itinerary = IndexMap::Periodic {
            pattern: vec![0, 2, 2, 1],
            phase: 0,
        };
        let err = make_family_switch(&spec).unwrap_err();
        assert!(err.to_string().contains("never appear in pairs"), "{err}");

        let mut spec = two_letters();
        spec.connector =
            Some(Operator::dense(Matrix::from_rows(&[vec![1.2, 0.5], vec![0.0, 1.0 / 1.2]]).unwrap()).unwrap());
        spec.itinerary = IndexMap::Periodic {
            pattern: vec![0, 2, 1],
            phase: 0,
        };
        assert!(matches!(make_family_switch(&spec), Err(Error::Rule(_))));

        let mut spec = two_letters();
        spec.connector = Some(Operator::diag(&[2.5, 0.4]).unwrap());
        spec.itinerary = IndexMap::Periodic {
            pattern: vec![0, 2],
            phase: 0,
        };
        let err = make_family_switch(&spec).unwrap_err();
        assert!(err.to_string().contains("‖U‖ < e^λ̃"), "{err}");
    }
}
