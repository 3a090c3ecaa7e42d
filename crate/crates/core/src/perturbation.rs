//! Bounded Lipschitz perturbations f_n, the maps F_n = A_n + f_n and the
//! nonlinear cocycle ℱ(m, n).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::OperatorSequence;
use crate::error::{Error, Result};
use crate::linops::{NormKind, Space, Vector};
use crate::scalar::Real;

const INVERSE_ITER_CAP: usize = 10_000;

/// Scalar profile g: X → ℝ built from bounded primitives.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarExpr<T> {
    Const(T),
    /// sin(freq · x_coord + phase).
    Sin {
        coord: i64,
        freq: T,
        phase: T,
    },
    /// x_coord clamped to [lo, hi].
    Clamp {
        coord: i64,
        lo: T,
        hi: T,
    },
    Scaled(T, Box<ScalarExpr<T>>),
    Sum(Vec<ScalarExpr<T>>),
}

impl<T: Real> ScalarExpr<T> {
    pub fn sin(coord: i64) -> Self {
        ScalarExpr::Sin {
            coord,
            freq: T::one(),
            phase: T::zero(),
        }
    }

    pub fn eval(&self, x: &Vector<T>) -> T {
        match self {
            ScalarExpr::Const(a) => *a,
            ScalarExpr::Sin { coord, freq, phase } => (*freq * x.get(*coord) + *phase).sin(),
            ScalarExpr::Clamp { coord, lo, hi } => x.get(*coord).max(*lo).min(*hi),
            ScalarExpr::Scaled(a, e) => *a * e.eval(x),
            ScalarExpr::Sum(es) => es.iter().map(|e| e.eval(x)).sum(),
        }
    }

    /// g(base + offset) without forming base + offset, so that a small offset
    /// keeps its precision next to a huge base.
    pub fn eval_offset(&self, base: &Vector<T>, offset: &Vector<T>) -> T {
        match self {
            ScalarExpr::Const(a) => *a,
            ScalarExpr::Sin { coord, freq, phase } => {
                let theta = *freq * base.get(*coord) + *phase;
                let d = *freq * offset.get(*coord);
                theta.sin() * d.cos() + theta.cos() * d.sin()
            }
            ScalarExpr::Clamp { coord, lo, hi } => (base.get(*coord) + offset.get(*coord)).max(*lo).min(*hi),
            ScalarExpr::Scaled(a, e) => *a * e.eval_offset(base, offset),
            ScalarExpr::Sum(es) => es.iter().map(|e| e.eval_offset(base, offset)).sum(),
        }
    }

    /// Lipschitz constant w.r.t. any p-norm (coordinates are 1-Lipschitz).
    pub fn lipschitz(&self) -> T {
        match self {
            ScalarExpr::Const(_) => T::zero(),
            ScalarExpr::Sin { freq, .. } => freq.abs(),
            ScalarExpr::Clamp { .. } => T::one(),
            ScalarExpr::Scaled(a, e) => a.abs() * e.lipschitz(),
            ScalarExpr::Sum(es) => es.iter().map(|e| e.lipschitz()).sum(),
        }
    }

    pub fn sup(&self) -> T {
        match self {
            ScalarExpr::Const(a) => a.abs(),
            ScalarExpr::Sin { .. } => T::one(),
            ScalarExpr::Clamp { lo, hi, .. } => lo.abs().max(hi.abs()),
            ScalarExpr::Scaled(a, e) => a.abs() * e.sup(),
            ScalarExpr::Sum(es) => es.iter().map(|e| e.sup()).sum(),
        }
    }

    fn coords(&self, out: &mut Vec<i64>) {
        match self {
            ScalarExpr::Const(_) => {}
            ScalarExpr::Sin { coord, .. } | ScalarExpr::Clamp { coord, .. } => out.push(*coord),
            ScalarExpr::Scaled(_, e) => e.coords(out),
            ScalarExpr::Sum(es) => es.iter().for_each(|e| e.coords(out)),
        }
    }
}

/// direction · profile(x).
#[derive(Clone, Debug, PartialEq)]
pub struct Term<T> {
    pub direction: Vector<T>,
    pub profile: ScalarExpr<T>,
}

/// Time dependence: f_n = factor(n) · Σ terms, with |factor| ≤ 1.
#[derive(Clone, Debug, PartialEq)]
pub enum Modulation<T> {
    Constant,
    Periodic { phase: i64, factors: Vec<T> },
}

impl<T: Real> Modulation<T> {
    pub fn factor(&self, n: i64) -> T {
        match self {
            Modulation::Constant => T::one(),
            Modulation::Periodic { phase, factors } => factors[(n - phase).rem_euclid(factors.len() as i64) as usize],
        }
    }
}

/// The rule n ↦ f_n with declared Lipschitz constant c and sup bound M.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSequence<T> {
    terms: Vec<Term<T>>,
    modulation: Modulation<T>,
    lipschitz: T,
    bound: T,
}

impl<T: Real> PerturbationSequence<T> {
    /// Declared constants are stored as given; see [`audit_constants`].
    pub fn new(terms: Vec<Term<T>>, modulation: Modulation<T>, lipschitz: T, bound: T) -> Result<Self> {
        if !(lipschitz >= T::zero() && bound >= T::zero()) {
            return Err(Error::Invalid(format!(
                "need c >= 0 and M >= 0, got c = {lipschitz}, M = {bound}"
            )));
        }
        if let Modulation::Periodic { factors, .. } = &modulation {
            if factors.is_empty() || factors.iter().any(|f| f.abs() > T::one()) {
                return Err(Error::Invalid(
                    "modulation factors must be non-empty with |factor| <= 1".into(),
                ));
            }
        }
        Ok(PerturbationSequence {
            terms,
            modulation,
            lipschitz,
            bound,
        })
    }

    /// Declares the constants the grammar guarantees.
    pub fn analytic(terms: Vec<Term<T>>, modulation: Modulation<T>, p: NormKind) -> Result<Self> {
        let (c, m) = analytic_constants(&terms, p);
        Self::new(terms, modulation, c, m)
    }

    pub fn zero() -> Self {
        PerturbationSequence {
            terms: vec![],
            modulation: Modulation::Constant,
            lipschitz: T::zero(),
            bound: T::zero(),
        }
    }

    /// amplitude · sin(x_coord) · direction, constant in n, with c = M = amplitude·‖direction‖.
    pub fn sine(amplitude: T, coord: i64, direction: Vector<T>, p: NormKind) -> Self {
        let k = amplitude.abs() * direction.norm(p);
        PerturbationSequence {
            terms: vec![Term {
                direction,
                profile: ScalarExpr::Scaled(amplitude, Box::new(ScalarExpr::sin(coord))),
            }],
            modulation: Modulation::Constant,
            lipschitz: k,
            bound: k,
        }
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    pub fn terms(&self) -> &[Term<T>] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_declared(mut self, lipschitz: T, bound: T) -> Self {
        self.lipschitz = lipschitz;
        self.bound = bound;
        self
    }

    pub fn check_space(&self, space: Space) -> Result<()> {
        for t in &self.terms {
            space.check(&t.direction)?;
            if let Space::Dense(d) = space {
                let mut cs = vec![];
                t.profile.coords(&mut cs);
                if let Some(c) = cs.into_iter().find(|c| *c < 0 || *c >= d as i64) {
                    return Err(Error::Invalid(format!("coordinate {c} outside dense({d})")));
                }
            }
        }
        Ok(())
    }

    /// f_n(x).
    pub fn eval(&self, n: i64, x: &Vector<T>) -> Vector<T> {
        let mut out = x.space().zero();
        let a = self.modulation.factor(n);
        if a == T::zero() {
            return out;
        }
        for t in &self.terms {
            out = out.axpy(a * t.profile.eval(x), &t.direction);
        }
        out
    }

    /// f_n(base + offset), see [`ScalarExpr::eval_offset`].
    pub fn eval_offset(&self, n: i64, base: &Vector<T>, offset: &Vector<T>) -> Vector<T> {
        let mut out = base.space().zero();
        let a = self.modulation.factor(n);
        if a == T::zero() {
            return out;
        }
        for t in &self.terms {
            out = out.axpy(a * t.profile.eval_offset(base, offset), &t.direction);
        }
        out
    }

    /// Coordinates read or written; used to sample sparse spaces.
    fn active_indices(&self) -> Vec<i64> {
        let mut idx = vec![];
        for t in &self.terms {
            t.profile.coords(&mut idx);
            if t.direction.is_sparse() {
                idx.extend(t.direction.entries().map(|(i, _)| i));
            }
        }
        idx.sort_unstable();
        idx.dedup();
        idx
    }
}

/// (c, M) implied by the grammar.
pub fn analytic_constants<T: Real>(terms: &[Term<T>], p: NormKind) -> (T, T) {
    terms.iter().fold((T::zero(), T::zero()), |(c, m), t| {
        let dn = t.direction.norm(p);
        (c + dn * t.profile.lipschitz(), m + dn * t.profile.sup())
    })
}

/// How [`audit_constants`] draws its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampler {
    pub count: usize,
    pub radius: f64,
    pub times: (i64, i64),
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantAudit<T> {
    pub c_emp: T,
    pub m_emp: T,
    pub c_flagged: bool,
    pub m_flagged: bool,
}

impl<T: Real> ConstantAudit<T> {
    pub fn flagged(&self) -> bool {
        self.c_flagged || self.m_flagged
    }
}

fn random_point<T: Real>(rng: &mut ChaCha8Rng, space: Space, idx: &[i64], radius: f64) -> Vector<T> {
    match space {
        Space::Dense(d) => Vector::dense((0..d).map(|_| T::lit(rng.gen_range(-radius..=radius))).collect()),
        Space::Sparse => Vector::sparse(
            idx.iter()
                .map(|i| (*i, T::lit(rng.gen_range(-radius..=radius))))
                .collect::<Vec<_>>(),
        ),
    }
}

/// Empirical Lipschitz quotient and sup over random pairs; flags declared
/// constants that the samples contradict.
pub fn audit_constants<T: Real>(
    pert: &PerturbationSequence<T>,
    space: Space,
    sampler: &Sampler,
    p: NormKind,
) -> Result<ConstantAudit<T>> {
    if sampler.count < 2 {
        return Err(Error::Invalid("audit needs at least 2 samples".into()));
    }
    pert.check_space(space)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let idx = pert.active_indices();
    let (mut c_emp, mut m_emp) = (T::zero(), T::zero());
    for i in 0..sampler.count {
        let n = rng.gen_range(sampler.times.0..=sampler.times.1);
        let x: Vector<T> = random_point(&mut rng, space, &idx, sampler.radius);
        // alternate wide pairs with close pairs that probe the derivative
        let spread = if i % 2 == 0 {
            sampler.radius
        } else {
            sampler.radius * 1e-3
        };
        let y = x.add(&random_point(&mut rng, space, &idx, spread));
        let fx = pert.eval(n, &x);
        m_emp = m_emp.max(fx.norm(p)).max(pert.eval(n, &y).norm(p));
        let dxy = x.dist(&y, p);
        if dxy > T::zero() {
            c_emp = c_emp.max(fx.dist(&pert.eval(n, &y), p) / dxy);
        }
    }
    Ok(ConstantAudit {
        c_emp,
        m_emp,
        c_flagged: c_emp > pert.lipschitz * (T::one() + T::lit(1e-6)),
        m_flagged: m_emp > pert.bound,
    })
}

/// F_n = A_n + f_n together with the growth bound ρ of (A_n).
#[derive(Clone, Debug)]
pub struct NonlinearSystem<T> {
    pub seq: OperatorSequence<T>,
    pub pert: PerturbationSequence<T>,
    pub rho: T,
    pub norm: NormKind,
}

/// Result of one backward step F_j⁻¹(x).
#[derive(Clone, Debug)]
pub struct InverseSolve<T> {
    pub value: Vector<T>,
    /// ‖y_{i+1} − y_i‖ for each iterate.
    pub gaps: Vec<T>,
    /// A-posteriori bound on ‖value − F_j⁻¹(x)‖.
    pub error: T,
}

impl<T: Real> NonlinearSystem<T> {
    pub fn new(seq: OperatorSequence<T>, pert: PerturbationSequence<T>, norm: NormKind) -> Result<Self> {
        pert.check_space(seq.space())?;
        let rho = seq.global_growth_bound(norm)?;
        Ok(NonlinearSystem { seq, pert, rho, norm })
    }

    /// c·e^ρ, the contraction factor of every backward step.
    pub fn backward_factor(&self) -> T {
        self.pert.lipschitz() * self.rho.exp()
    }

    /// F_n(x) = A_n x + f_n(x).
    pub fn forward_step(&self, n: i64, x: &Vector<T>) -> Vector<T> {
        self.seq.step(n, x).add(&self.pert.eval(n, x))
    }

    /// ℱ(m, n)x = F_{m-1} ∘ ⋯ ∘ F_n x for m ≥ n.
    pub fn forward(&self, m: i64, n: i64, x: &Vector<T>) -> Result<Vector<T>> {
        if m < n {
            return Err(Error::Invalid(format!("forward needs m >= n, got m = {m}, n = {n}")));
        }
        self.seq.space().check(x)?;
        let mut y = x.clone();
        for k in n..m {
            y = self.forward_step(k, &y);
        }
        Ok(y)
    }

    /// F_j⁻¹(x) by iterating y ← A_j⁻¹(x − f_j(y)) from y₀ = A_j⁻¹x.
    pub fn inverse_step(&self, j: i64, x: &Vector<T>, tol: T) -> Result<InverseSolve<T>> {
        let kappa = self.backward_factor();
        if !(kappa < T::one()) {
            return Err(Error::BackwardContraction { value: kappa.as_f64() });
        }
        let stop = tol * (T::one() - kappa);
        let mut y = self.seq.step_inverse(j, x);
        let mut gaps = Vec::new();
        if self.pert.is_zero() {
            return Ok(InverseSolve {
                value: y,
                gaps,
                error: T::zero(),
            });
        }
        for _ in 0..INVERSE_ITER_CAP {
            let next = self.seq.step_inverse(j, &x.sub(&self.pert.eval(j, &y)));
            let gap = next.dist(&y, self.norm);
            gaps.push(gap);
            y = next;
            // below a few ulps of ‖y‖ the iterate cannot move further
            let floor = T::lit(8.0) * T::epsilon() * y.norm(self.norm);
            if gap <= stop || gap <= floor {
                let error = kappa / (T::one() - kappa) * gap + floor;
                return Ok(InverseSolve { value: y, gaps, error });
            }
        }
        Err(Error::IterationCap {
            iterations: INVERSE_ITER_CAP,
            residual: gaps.last().map_or(f64::NAN, |g| g.as_f64()),
        })
    }

    /// ℱ(m, n)x = F_m⁻¹ ∘ ⋯ ∘ F_{n-1}⁻¹ x for m < n.
    pub fn backward(&self, m: i64, n: i64, x: &Vector<T>, tol: T) -> Result<Vector<T>> {
        if m >= n {
            return Err(Error::Invalid(format!("backward needs m < n, got m = {m}, n = {n}")));
        }
        if !(tol > T::zero()) {
            return Err(Error::Invalid("backward tolerance must be positive".into()));
        }
        self.seq.space().check(x)?;
        let mut y = x.clone();
        for j in (m..n).rev() {
            y = self.inverse_step(j, &y, tol)?.value;
        }
        Ok(y)
    }

    /// ℱ(m, n) for any m, n.
    pub fn flow(&self, m: i64, n: i64, x: &Vector<T>, tol: T) -> Result<Vector<T>> {
        if m >= n {
            self.forward(m, n, x)
        } else {
            self.backward(m, n, x, tol)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::Operator;

    fn scalar_system(amp: f64) -> NonlinearSystem<f64> {
        let seq = OperatorSequence::constant(Operator::scaled_identity(0.5).unwrap(), Space::Dense(1)).unwrap();
        let pert = PerturbationSequence::sine(amp, 0, Vector::dense(vec![1.0]), NormKind::L2);
        NonlinearSystem::new(seq, pert, NormKind::L2).unwrap()
    }

    fn sampler() -> Sampler {
        Sampler {
            count: 400,
            radius: 3.0,
            times: (-5, 5),
            seed: 11,
        }
    }

    #[test]
    fn audit_examples() {
        let zero = PerturbationSequence::<f64>::zero();
        let a = audit_constants(&zero, Space::Dense(2), &sampler(), NormKind::L2).unwrap();
        assert_eq!((a.c_emp, a.m_emp), (0.0, 0.0));

        let f = PerturbationSequence::sine(0.05, 0, Vector::dense(vec![1.0, 0.0]), NormKind::L2);
        let a = audit_constants(&f, Space::Dense(2), &sampler(), NormKind::L2).unwrap();
        assert!(a.c_emp <= 0.05 && a.m_emp <= 0.05 && !a.flagged(), "{a:?}");
        assert!(a.c_emp > 0.04);

        let lying = f.with_declared(0.01, 0.05);
        assert!(
            audit_constants(&lying, Space::Dense(2), &sampler(), NormKind::L2)
                .unwrap()
                .c_flagged
        );
    }

    #[test]
    fn analytic_constants_follow_grammar() {
        let terms = vec![Term {
            direction: Vector::dense(vec![3.0, 4.0]),
            profile: ScalarExpr::Sum(vec![
                ScalarExpr::Scaled(0.1, Box::new(ScalarExpr::sin(1))),
                ScalarExpr::Clamp {
                    coord: 0,
                    lo: -0.2,
                    hi: 0.1,
                },
            ]),
        }];
        let (c, m): (f64, f64) = analytic_constants(&terms, NormKind::L2);
        assert!((c - 5.0 * 1.1).abs() < 1e-12);
        assert!((m - 5.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn offset_evaluation_matches_plain_sum() {
        let e = ScalarExpr::Sum(vec![
            ScalarExpr::Sin {
                coord: 0,
                freq: 1.7,
                phase: 0.3,
            },
            ScalarExpr::Scaled(
                0.5,
                Box::new(ScalarExpr::Clamp {
                    coord: 1,
                    lo: -0.2,
                    hi: 0.4,
                }),
            ),
            ScalarExpr::Const(0.1),
        ]);
        let base = Vector::<f64>::dense(vec![0.8, 0.1]);
        let off = Vector::dense(vec![-0.05, 0.2]);
        assert!((e.eval_offset(&base, &off) - e.eval(&base.add(&off))).abs() < 1e-15);
    }

    #[test]
    fn forward_examples() {
        let sys = scalar_system(0.05);
        let x = Vector::dense(vec![1.0]);
        assert_eq!(sys.forward(3, 3, &x).unwrap(), x);
        assert_eq!(sys.forward(1, 0, &Vector::zeros(1)).unwrap(), Vector::zeros(1));
        let f = |t: f64| 0.5 * t + 0.05 * t.sin();
        let two = sys.forward(2, 0, &x).unwrap();
        assert!((two.get(0) - f(f(1.0))).abs() < 1e-15);
        assert!(sys.forward(0, 1, &x).is_err());
    }

    #[test]
    fn backward_examples() {
        let sys = scalar_system(0.05);
        assert_eq!(sys.backward(-1, 0, &Vector::zeros(1), 1e-12).unwrap(), Vector::zeros(1));

        // bisection oracle for F(y) = 0.5
        let f = |t: f64| 0.5 * t + 0.05 * t.sin();
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.5 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let y = sys.backward(-1, 0, &Vector::dense(vec![0.5]), 1e-12).unwrap().get(0);
        assert!((y - lo).abs() < 1e-11);
        assert!((f(y) - 0.5).abs() < 1e-12);

        let linear = scalar_system(0.0);
        let x = Vector::dense(vec![0.3]);
        assert_eq!(
            linear.backward(-3, 0, &x, 1e-12).unwrap(),
            linear.seq.transition(-3, 0, &x).unwrap()
        );
    }

    #[test]
    fn backward_refuses_without_contraction() {
        let sys = scalar_system(0.6); // c·e^ρ = 0.6·2
        assert_eq!(
            sys.backward(-1, 0, &Vector::dense(vec![1.0]), 1e-9).unwrap_err(),
            Error::BackwardContraction { value: 1.2 }
        );
    }

    #[test]
    fn inverse_gaps_shrink_by_contraction_factor() {
        let sys = scalar_system(0.2);
        let kappa = sys.backward_factor();
        let s = sys.inverse_step(0, &Vector::dense(vec![1.3]), 1e-14).unwrap();
        assert!(s.gaps.len() > 3);
        for w in s.gaps.windows(2) {
            if w[0] > 1e-13 {
                assert!(w[1] <= kappa * w[0] * (1.0 + 1e-9), "{:?}", s.gaps);
            }
        }
    }
}
