//! Projection families, finite-window verification of generalized exponential
//! dichotomies, constant fitting, the bounded-solution (Green) operator and
//! bounded-orbit witnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::{OperatorSequence, Window};
use crate::error::{Error, Result};
use crate::linops::{IndexSet, Matrix, NormKind, Operator, Space, Vector};
use crate::scalar::Real;

const SPLIT_TOL: f64 = 1e-12;
const NEST_TOL: f64 = 1e-10;
const DECAY_SLACK: f64 = 1e-9;

/// A fixed tolerance, widened to a few ulps when `T` is coarser than f64.
fn tol<T: Real>(base: f64, ulps: f64) -> T {
    T::lit(base).max(T::lit(ulps) * T::epsilon())
}
/// Largest D accepted by [`fit_constants`].
pub const D_CAP: f64 = 1e6;

/// An idempotent P_n. S(n) = range P_n, U(n) = ker P_n.
#[derive(Clone, Debug, PartialEq)]
pub enum Projector<T> {
    Dense(Matrix<T>),
    /// Keeps the coordinates whose index lies in the set.
    Coordinates(IndexSet),
}

impl<T: Real> Projector<T> {
    pub fn dense(m: Matrix<T>) -> Result<Self> {
        let d = m.dim();
        let p2 = m.mul(&m);
        let worst = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (p2.get(i, j) - m.get(i, j)).abs())
            .fold(T::zero(), T::max);
        if worst > tol::<T>(SPLIT_TOL, 16.0) * (T::one() + m.norm_inf()) {
            return Err(Error::Invalid(format!(
                "projection matrix is not idempotent (‖P²-P‖ = {worst})"
            )));
        }
        Ok(Projector::Dense(m))
    }

    pub fn diag(mask: &[bool]) -> Self {
        let d: Vec<T> = mask.iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
        Projector::Dense(Matrix::diag(&d))
    }

    pub fn coordinates(set: IndexSet) -> Self {
        Projector::Coordinates(set)
    }

    pub fn apply(&self, v: &Vector<T>) -> Vector<T> {
        match self {
            Projector::Dense(m) => Vector::Dense(m.mul_vec(v.as_dense().expect("dense projector on dense vector"))),
            Projector::Coordinates(s) => v.filter(|i| s.contains(i)),
        }
    }

    /// (Id - P) v.
    pub fn apply_complement(&self, v: &Vector<T>) -> Vector<T> {
        match self {
            Projector::Dense(_) => v.sub(&self.apply(v)),
            Projector::Coordinates(s) => v.filter(|i| !s.contains(i)),
        }
    }

    pub fn norm(&self, p: NormKind) -> Result<T> {
        match self {
            Projector::Dense(m) => m.operator_norm(p),
            Projector::Coordinates(s) => Ok(if s.is_empty() { T::zero() } else { T::one() }),
        }
    }

    /// dim S(n) inside ℝ^d.
    pub fn rank(&self, d: usize) -> usize {
        match self {
            Projector::Dense(m) => m.trace().round().to_usize().unwrap_or(0),
            Projector::Coordinates(s) => (0..d as i64).filter(|i| s.contains(*i)).count(),
        }
    }

    fn fits(&self, space: Space) -> bool {
        match (self, space) {
            (Projector::Dense(m), Space::Dense(d)) => m.dim() == d,
            (Projector::Dense(_), Space::Sparse) => false,
            (Projector::Coordinates(_), _) => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum ProjectionRule<T> {
    Constant(Projector<T>),
    Windowed { start: i64, list: Vec<Projector<T>> },
}

/// The rule n ↦ P_n.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionFamily<T> {
    rule: ProjectionRule<T>,
}

impl<T: Real> ProjectionFamily<T> {
    pub fn constant(p: Projector<T>) -> Self {
        ProjectionFamily {
            rule: ProjectionRule::Constant(p),
        }
    }

    /// list[n - start] on the window, extended constantly outside.
    pub fn windowed(start: i64, list: Vec<Projector<T>>) -> Result<Self> {
        if list.is_empty() {
            return Err(Error::Invalid(
                "windowed projection family needs at least one projector".into(),
            ));
        }
        Ok(ProjectionFamily {
            rule: ProjectionRule::Windowed { start, list },
        })
    }

    pub fn at(&self, n: i64) -> &Projector<T> {
        match &self.rule {
            ProjectionRule::Constant(p) => p,
            ProjectionRule::Windowed { start, list } => &list[(n - start).clamp(0, list.len() as i64 - 1) as usize],
        }
    }

    fn all(&self) -> Vec<&Projector<T>> {
        match &self.rule {
            ProjectionRule::Constant(p) => vec![p],
            ProjectionRule::Windowed { list, .. } => list.iter().collect(),
        }
    }

    pub fn check_space(&self, space: Space) -> Result<()> {
        if self.all().iter().all(|p| p.fits(space)) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: space.to_string(),
                right: "projection family".into(),
            })
        }
    }

    /// sup_n ‖P_n‖ (exact: the rule is finitely described).
    pub fn sup_norm(&self, p: NormKind) -> Result<T> {
        self.all().iter().try_fold(T::zero(), |acc, q| Ok(acc.max(q.norm(p)?)))
    }
}

/// Test vectors used by the verifier.
#[derive(Clone, Debug, PartialEq)]
pub struct Probes {
    /// Dense spaces up to this dimension use the full standard basis.
    pub exhaustive_max_dim: usize,
    /// Number of random unit vectors above that dimension.
    pub random_count: usize,
    pub seed: u64,
    /// Sparse spaces are probed with δ_j for |j - center| ≤ radius.
    pub sparse_center: i64,
    pub sparse_radius: i64,
}

impl Default for Probes {
    fn default() -> Self {
        Probes {
            exhaustive_max_dim: 32,
            random_count: 64,
            seed: 0x5eed,
            sparse_center: 0,
            sparse_radius: 8,
        }
    }
}

impl Probes {
    pub fn vectors<T: Real>(&self, space: Space, p: NormKind) -> Vec<Vector<T>> {
        match space {
            Space::Dense(d) if d <= self.exhaustive_max_dim => (0..d).map(|j| Vector::basis(d, j)).collect(),
            Space::Dense(d) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.random_count)
                    .map(|_| {
                        let v = Vector::dense((0..d).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect());
                        let n = v.norm(p);
                        v.scale(T::one() / n)
                    })
                    .collect()
            }
            Space::Sparse => (self.sparse_center - self.sparse_radius..=self.sparse_center + self.sparse_radius)
                .map(Vector::delta)
                .collect(),
        }
    }
}

/// (n, m, v) exhibiting the worst case of a check.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub n: i64,
    pub m: i64,
    pub vector: Vector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome<T> {
    pub passed: bool,
    /// Worst slack: absolute for splitting/nesting, relative for decay.
    /// Negative means violated.
    pub margin: T,
    pub witness: Option<Witness<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport<T> {
    pub splitting: CheckOutcome<T>,
    pub nesting: CheckOutcome<T>,
    pub stable_decay: CheckOutcome<T>,
    pub unstable_decay: CheckOutcome<T>,
    pub projection_bound: CheckOutcome<T>,
    /// max_n ‖P_n‖ over the window.
    pub max_projection_norm: T,
    pub passed: bool,
}

impl<T: Real> VerificationReport<T> {
    pub fn failures(&self) -> Vec<&'static str> {
        [
            ("splitting", &self.splitting),
            ("nesting", &self.nesting),
            ("stable-decay", &self.stable_decay),
            ("unstable-decay", &self.unstable_decay),
            ("projection-bound", &self.projection_bound),
        ]
        .into_iter()
        .filter(|(_, c)| !c.passed)
        .map(|(n, _)| n)
        .collect()
    }
}

/// Worst growth ratio ‖𝒜(m,n)v‖/‖v‖ per lag |m - n|.
struct DecayProfile<T> {
    stable: Vec<Option<(T, Witness<T>)>>,
    unstable: Vec<Option<(T, Witness<T>)>>,
}

fn record<T: Real>(slot: &mut Option<(T, Witness<T>)>, ratio: T, w: impl FnOnce() -> Witness<T>) {
    if slot.as_ref().is_none_or(|(r, _)| ratio > *r) {
        *slot = Some((ratio, w()));
    }
}

fn decay_profile<T: Real>(
    seq: &OperatorSequence<T>,
    proj: &ProjectionFamily<T>,
    window: Window,
    probes: &[Vector<T>],
    p: NormKind,
) -> DecayProfile<T> {
    let lags = window.len();
    let mut prof = DecayProfile {
        stable: vec![None; lags],
        unstable: vec![None; lags],
    };
    for n in window.iter() {
        for e in probes {
            let v = proj.at(n).apply(e);
            let nv = v.norm(p);
            if nv > T::zero() {
                let mut cur = v.clone();
                for m in n..=window.end {
                    let r = cur.norm(p) / nv;
                    record(&mut prof.stable[(m - n) as usize], r, || Witness {
                        n,
                        m,
                        vector: v.clone(),
                    });
                    cur = seq.step(m, &cur);
                }
            }
            let u = proj.at(n).apply_complement(e);
            let nu = u.norm(p);
            if nu > T::zero() {
                let mut cur = u.clone();
                for m in (window.start..=n).rev() {
                    let r = cur.norm(p) / nu;
                    record(&mut prof.unstable[(n - m) as usize], r, || Witness {
                        n,
                        m,
                        vector: u.clone(),
                    });
                    if m > window.start {
                        cur = seq.step_inverse(m - 1, &cur);
                    }
                }
            }
        }
    }
    prof
}

/// Smallest D with ratio_k ≤ D e^{-λk} for lags k < `max_lag`, with the worst witness.
fn required_d<T: Real>(side: &[Option<(T, Witness<T>)>], lambda: T, max_lag: usize) -> (T, Option<Witness<T>>) {
    let mut best = (T::zero(), None);
    for (k, slot) in side.iter().enumerate().take(max_lag) {
        if let Some((r, w)) = slot {
            let need = *r * (lambda * T::lit(k as f64)).exp();
            if need > best.0 {
                best = (need, Some(w.clone()));
            }
        }
    }
    best
}

fn decay_outcome<T: Real>(side: &[Option<(T, Witness<T>)>], d: T, lambda: T) -> CheckOutcome<T> {
    let (need, witness) = required_d(side, lambda, side.len());
    let margin = T::one() - need / d;
    CheckOutcome {
        passed: margin >= -tol::<T>(DECAY_SLACK, 4.0 * side.len() as f64),
        margin,
        witness,
    }
}

/// Checks the splitting, nesting, decay and projection-bound conditions of a
/// generalized exponential dichotomy with constants (D, λ) on `window`.
pub fn verify_dichotomy<T: Real>(
    seq: &OperatorSequence<T>,
    proj: &ProjectionFamily<T>,
    window: Window,
    d: T,
    lambda: T,
    probes: &Probes,
    p: NormKind,
) -> Result<VerificationReport<T>> {
    if window.len() < 2 {
        return Err(Error::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    if !(d > T::zero() && lambda > T::zero()) {
        return Err(Error::Invalid(format!(
            "need D > 0 and λ > 0, got D = {d}, λ = {lambda}"
        )));
    }
    proj.check_space(seq.space())?;
    let vs = probes.vectors(seq.space(), p);

    let mut split = CheckOutcome {
        passed: true,
        margin: T::infinity(),
        witness: None,
    };
    let mut nest = split.clone();
    let mut pmax = T::zero();
    for n in window.iter() {
        let pn = proj.at(n);
        pmax = pmax.max(pn.norm(p)?);
        for v in &vs {
            let nv = v.norm(p);
            let scale = T::one().max(nv);
            let pv = pn.apply(v);
            let qv = pn.apply_complement(v);
            let resid = v.sub(&pv).sub(&qv).norm(p).max(pn.apply(&pv).sub(&pv).norm(p));
            let margin = tol::<T>(SPLIT_TOL, 16.0) * scale - resid;
            if margin < split.margin {
                split.margin = margin;
                split.witness = Some(Witness {
                    n,
                    m: n,
                    vector: v.clone(),
                });
            }

            let pnext = proj.at(n + 1);
            let fwd = pnext.apply_complement(&seq.step(n, &pv)).norm(p);
            let back = pn.apply(&seq.step_inverse(n, &pnext.apply_complement(v))).norm(p);
            let margin = tol::<T>(NEST_TOL, 64.0) * nv - fwd.max(back);
            if margin < nest.margin {
                nest.margin = margin;
                nest.witness = Some(Witness {
                    n,
                    m: n + 1,
                    vector: v.clone(),
                });
            }
        }
    }
    split.passed = split.margin >= T::zero();
    nest.passed = nest.margin >= T::zero();

    let prof = decay_profile(seq, proj, window, &vs, p);
    let stable_decay = decay_outcome(&prof.stable, d, lambda);
    let unstable_decay = decay_outcome(&prof.unstable, d, lambda);
    let projection_bound = CheckOutcome {
        passed: pmax.is_finite(),
        margin: if pmax.is_finite() { T::zero() } else { -T::infinity() },
        witness: None,
    };
    let passed = split.passed && nest.passed && stable_decay.passed && unstable_decay.passed && projection_bound.passed;
    Ok(VerificationReport {
        splitting: split,
        nesting: nest,
        stable_decay,
        unstable_decay,
        projection_bound,
        max_projection_norm: pmax,
        passed,
    })
}

/// Scans `lambda_grid` and fits the smallest D per λ; returns the largest λ
/// whose D is finite (not still growing across the window) and below [`D_CAP`].
pub fn fit_constants<T: Real>(
    seq: &OperatorSequence<T>,
    proj: &ProjectionFamily<T>,
    window: Window,
    lambda_grid: &[T],
    probes: &Probes,
    p: NormKind,
) -> Result<Option<(T, T)>> {
    if window.len() < 2 {
        return Err(Error::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    proj.check_space(seq.space())?;
    let vs = probes.vectors(seq.space(), p);
    let prof = decay_profile(seq, proj, window, &vs, p);
    let full = window.len();
    let half = full / 2 + 1;
    let mut best: Option<(T, T)> = None;
    for &lambda in lambda_grid.iter().filter(|l| **l > T::zero()) {
        let d_of = |lags| {
            let (a, _) = required_d(&prof.stable, lambda, lags);
            let (b, _) = required_d(&prof.unstable, lambda, lags);
            a.max(b).max(T::one())
        };
        let (d_full, d_half) = (d_of(full), d_of(half));
        let bounded = d_full <= d_half * (T::one() + tol::<T>(DECAY_SLACK, 4.0 * full as f64));
        if bounded && d_full < T::lit(D_CAP) && best.is_none_or(|(l, _)| lambda > l) {
            best = Some((lambda, d_full));
        }
    }
    Ok(best)
}

/// A family (A_n) together with a verified (or refuted) dichotomy claim.
#[derive(Clone, Debug)]
pub struct DichotomyCertificate<T> {
    pub seq: OperatorSequence<T>,
    pub proj: ProjectionFamily<T>,
    pub d: T,
    pub lambda: T,
    pub window: Window,
    pub norm: NormKind,
    pub report: VerificationReport<T>,
}

impl<T: Real> DichotomyCertificate<T> {
    pub fn verify(
        seq: OperatorSequence<T>,
        proj: ProjectionFamily<T>,
        window: Window,
        d: T,
        lambda: T,
        norm: NormKind,
        probes: &Probes,
    ) -> Result<Self> {
        let report = verify_dichotomy(&seq, &proj, window, d, lambda, probes, norm)?;
        Ok(DichotomyCertificate {
            seq,
            proj,
            d,
            lambda,
            window,
            norm,
            report,
        })
    }

    pub fn is_verified(&self) -> bool {
        self.report.passed
    }

    pub fn require_verified(&self) -> Result<()> {
        if self.report.passed {
            Ok(())
        } else {
            Err(Error::NotVerified(format!(
                "failed checks: {}",
                self.report.failures().join(", ")
            )))
        }
    }
}

/// Σ_{k=k_lo}^{m} 𝒜(m,k) P_k g(k) − Σ_{k=m+1}^{k_hi} 𝒜(m,k)(Id − P_k) g(k),
/// evaluated by nested (Horner) transport so each sum costs one step per term.
pub fn green_sum<T: Real>(
    seq: &OperatorSequence<T>,
    proj: &ProjectionFamily<T>,
    m: i64,
    k_lo: i64,
    k_hi: i64,
    mut g: impl FnMut(i64) -> Vector<T>,
) -> Vector<T> {
    let mut lower = seq.space().zero();
    for k in k_lo..=m {
        if k > k_lo {
            lower = seq.step(k - 1, &lower);
        }
        lower = lower.add(&proj.at(k).apply(&g(k)));
    }
    let mut upper = seq.space().zero();
    for k in (m + 1..=k_hi).rev() {
        upper = upper.add(&proj.at(k).apply_complement(&g(k)));
        upper = seq.step_inverse(k - 1, &upper);
    }
    lower.sub(&upper)
}

/// Smallest N ≥ 1 with D·Y·e^{-λN}/(1 - e^{-λ}) ≤ tol.
pub fn tail_depth<T: Real>(d: T, lambda: T, y_sup: T, tol: T) -> usize {
    if y_sup <= T::zero() {
        return 1;
    }
    let q = (-lambda).exp();
    let need = ((d * y_sup / ((T::one() - q) * tol)).ln() / lambda).ceil();
    let mut n = need.to_i64().unwrap_or(1).max(1) as usize;
    // guard against rounding in the logarithm
    while d * y_sup * (-lambda * T::lit(n as f64)).exp() / (T::one() - q) > tol {
        n += 1;
    }
    while n > 1 && d * y_sup * (-lambda * T::lit((n - 1) as f64)).exp() / (T::one() - q) <= tol {
        n -= 1;
    }
    n
}

/// The bounded solution x_n of x_{n+1} − A_n x_n = y_{n+1} on a window.
#[derive(Clone, Debug)]
pub struct BoundedSolution<T> {
    pub window: Window,
    pub depth: usize,
    pub values: Vec<Vector<T>>,
    /// Guaranteed bound on the difference-equation residual at interior points.
    pub residual_bound: T,
}

impl<T: Real> BoundedSolution<T> {
    pub fn at(&self, n: i64) -> Option<&Vector<T>> {
        self.window
            .contains(n)
            .then(|| &self.values[(n - self.window.start) as usize])
    }
}

/// Truncated series x_n = Σ_{k≤n} 𝒜(n,k)P_k y_k − Σ_{k>n} 𝒜(n,k)(Id−P_k) y_k.
pub fn bounded_solution<T: Real>(
    cert: &DichotomyCertificate<T>,
    y: impl Fn(i64) -> Vector<T>,
    y_sup: T,
    window: Window,
    tail_tol: T,
) -> Result<BoundedSolution<T>> {
    cert.require_verified()?;
    if !(tail_tol > T::zero()) || !(y_sup >= T::zero()) || !y_sup.is_finite() {
        return Err(Error::Invalid("need tail_tol > 0 and a finite sup‖y‖".into()));
    }
    let depth = tail_depth(cert.d, cert.lambda, y_sup, tail_tol);
    let nd = depth as i64;
    let mut values = Vec::with_capacity(window.len());
    for n in window.iter() {
        let lo = n - nd;
        let hi = n + nd;
        let ys: Vec<Vector<T>> = (lo..=hi).map(&y).collect();
        for v in &ys {
            cert.seq.space().check(v)?;
        }
        values.push(green_sum(&cert.seq, &cert.proj, n, lo, hi, |k| {
            ys[(k - lo) as usize].clone()
        }));
    }
    let rho = cert.seq.global_growth_bound(cert.norm)?;
    Ok(BoundedSolution {
        window,
        depth,
        values,
        residual_bound: T::lit(2.0) * tail_tol * (T::one() + rho.exp()),
    })
}

/// Outcome of following a complete linear orbit through x₀ at time 0.
#[derive(Clone, Debug, PartialEq)]
pub enum OrbitCheck<T> {
    /// Bounded on the window with both tails non-increasing.
    Bounded {
        max_norm: T,
        orbit: Vec<(i64, Vector<T>)>,
    },
    /// Bounded on the window but a tail is not decaying.
    NoDecay {
        max_norm: T,
    },
    Unbounded {
        first_exit: i64,
    },
}

const TAIL_STEPS: i64 = 5;

/// Follows x_n = 𝒜(n, 0) x₀ over the window (which must contain 0).
pub fn check_full_orbit_bounded<T: Real>(
    seq: &OperatorSequence<T>,
    x0: &Vector<T>,
    window: Window,
    bound: T,
    p: NormKind,
) -> Result<OrbitCheck<T>> {
    if x0.is_zero() {
        return Err(Error::Invalid("orbit witness needs x₀ ≠ 0".into()));
    }
    let orbit = seq.orbit(0, x0, window.start, window.end)?;
    let norms: Vec<T> = orbit.iter().map(|v| v.norm(p)).collect();
    let at = |n: i64| norms[(n - window.start) as usize];
    let reach = (-window.start).max(window.end);
    for r in 0..=reach {
        for n in [r, -r] {
            if window.contains(n) && !(at(n) <= bound) {
                return Ok(OrbitCheck::Unbounded { first_exit: n });
            }
        }
    }
    let max_norm = norms.iter().copied().fold(T::zero(), T::max);
    let fwd_from = (window.end - TAIL_STEPS).max(0);
    let back_to = (window.start + TAIL_STEPS).min(0);
    let fwd_ok = (fwd_from..window.end).all(|n| at(n + 1) <= at(n));
    let back_ok = (window.start..back_to).all(|n| at(n) <= at(n + 1));
    if fwd_ok && back_ok {
        Ok(OrbitCheck::Bounded {
            max_norm,
            orbit: window.iter().zip(orbit).collect(),
        })
    } else {
        Ok(OrbitCheck::NoDecay { max_norm })
    }
}

/// Distance to S(n) + A_n⁻¹U(n+1), or the reason it cannot be measured.
#[derive(Clone, Debug, PartialEq)]
pub enum RangeDistance<T> {
    Distance(T),
    NotCheckable(String),
}

impl<T: Real> RangeDistance<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            RangeDistance::Distance(d) => Some(*d),
            RangeDistance::NotCheckable(_) => None,
        }
    }
}

/// How far `v` is from S(n) + A_n⁻¹U(n+1).
pub fn range_distance<T: Real>(
    seq: &OperatorSequence<T>,
    proj: &ProjectionFamily<T>,
    n: i64,
    v: &Vector<T>,
    p: NormKind,
) -> Result<RangeDistance<T>> {
    seq.space().check(v)?;
    match seq.space() {
        Space::Dense(d) => {
            let mut cols: Vec<Vec<T>> = Vec::with_capacity(2 * d);
            for j in 0..d {
                let e = Vector::basis(d, j);
                cols.push(dense_of(proj.at(n).apply(&e)));
                cols.push(dense_of(seq.step_inverse(n, &proj.at(n + 1).apply_complement(&e))));
            }
            let mut basis: Vec<Vec<T>> = Vec::new();
            for c in cols {
                let cn = l2(&c);
                if cn == T::zero() {
                    continue;
                }
                let mut r = c;
                for _ in 0..2 {
                    for q in &basis {
                        let dot = dot(q, &r);
                        r.iter_mut().zip(q).for_each(|(x, y)| *x = *x - dot * *y);
                    }
                }
                let rn = l2(&r);
                let rel = rn / cn;
                if rel > T::lit(1e-6) {
                    basis.push(r.iter().map(|x| *x / rn).collect());
                } else if rel > T::lit(1e-10) {
                    return Ok(RangeDistance::NotCheckable(format!(
                        "subspace assembly at n = {n} is rank-ambiguous (relative residual {rel:e})"
                    )));
                }
            }
            let mut r = dense_of(v.clone());
            for q in &basis {
                let dt = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(x, y)| *x = *x - dt * *y);
            }
            Ok(RangeDistance::Distance(Vector::Dense(r).norm(p)))
        }
        Space::Sparse => {
            let (Projector::Coordinates(s_now), Projector::Coordinates(s_next)) = (proj.at(n), proj.at(n + 1)) else {
                return Ok(RangeDistance::NotCheckable(
                    "sparse range check needs coordinate projectors".into(),
                ));
            };
            let offset = match seq.at(n) {
                Operator::WeightedShift(_) => 1,
                Operator::ScaledIdentity(_) => 0,
                other => {
                    return Ok(RangeDistance::NotCheckable(format!(
                        "no index image for a {} operator",
                        other.kind()
                    )))
                }
            };
            let w = s_now.union(&s_next.complement().shifted(offset));
            Ok(RangeDistance::Distance(v.filter(|i| !w.contains(i)).norm(p)))
        }
    }
}

fn dense_of<T: Real>(v: Vector<T>) -> Vec<T> {
    match v {
        Vector::Dense(x) => x,
        Vector::Sparse(_) => unreachable!("dense space"),
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn l2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::WeightRule;

    fn ln2() -> f64 {
        2f64.ln()
    }

    fn exchange() -> (OperatorSequence<f64>, ProjectionFamily<f64>) {
        let seq = OperatorSequence::windowed(
            -1,
            vec![
                Operator::diag(&[0.5, 2.0]).unwrap(),
                Operator::diag(&[0.5, 0.5]).unwrap(),
            ],
            Space::Dense(2),
        )
        .unwrap();
        let proj = ProjectionFamily::windowed(
            -1,
            vec![Projector::diag(&[true, false]), Projector::diag(&[true, true])],
        )
        .unwrap();
        (seq, proj)
    }

    fn shift() -> (OperatorSequence<f64>, ProjectionFamily<f64>) {
        let op = Operator::weighted_shift(WeightRule::Step {
            crossing: 0,
            at_or_below: 0.5,
            above: 2.0,
        })
        .unwrap();
        (
            OperatorSequence::constant(op, Space::Sparse).unwrap(),
            ProjectionFamily::constant(Projector::coordinates(IndexSet::at_most(0))),
        )
    }

    fn w(a: i64, b: i64) -> Window {
        Window::new(a, b).unwrap()
    }

    #[test]
    fn pure_contraction_passes_with_zero_margin() {
        let seq = OperatorSequence::constant(Operator::scaled_identity(0.5).unwrap(), Space::Dense(2)).unwrap();
        let proj = ProjectionFamily::constant(Projector::diag(&[true, true]));
        let r = verify_dichotomy(&seq, &proj, w(-5, 5), 1.0, ln2(), &Probes::default(), NormKind::L2).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.stable_decay.margin.abs() < 1e-12);
    }

    #[test]
    fn exchange_passes_and_overclaimed_rate_fails() {
        let (seq, proj) = exchange();
        let r = verify_dichotomy(&seq, &proj, w(-20, 20), 1.0, ln2(), &Probes::default(), NormKind::L2).unwrap();
        assert!(r.passed, "{:?}", r.failures());
        let bad = verify_dichotomy(&seq, &proj, w(-20, 20), 1.0, 1.0, &Probes::default(), NormKind::L2).unwrap();
        assert!(!bad.stable_decay.passed);
        let wit = bad.stable_decay.witness.unwrap();
        assert!(wit.m > wit.n);
    }

    #[test]
    fn nesting_failure_is_witnessed() {
        // swapping the coordinates breaks A_n S(n) ⊂ S(n+1)
        let seq = OperatorSequence::constant(
            Operator::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap(),
            Space::Dense(2),
        )
        .unwrap();
        let proj = ProjectionFamily::constant(Projector::diag(&[true, false]));
        let r = verify_dichotomy(&seq, &proj, w(0, 3), 1.0, 0.1, &Probes::default(), NormKind::L2).unwrap();
        assert!(!r.nesting.passed);
        assert!(r.nesting.witness.is_some());
    }

    #[test]
    fn too_short_window_is_an_error() {
        let (seq, proj) = exchange();
        assert!(verify_dichotomy(&seq, &proj, w(0, 0), 1.0, 0.5, &Probes::default(), NormKind::L2).is_err());
    }

    #[test]
    fn fit_constants_examples() {
        let (seq, proj) = exchange();
        let got = fit_constants(
            &seq,
            &proj,
            w(-20, 20),
            &[0.3, ln2(), 1.0],
            &Probes::default(),
            NormKind::L2,
        )
        .unwrap()
        .unwrap();
        assert_eq!(got.0, ln2());
        assert!((got.1 - 1.0).abs() < 1e-12);

        let id = OperatorSequence::constant(Operator::identity(), Space::Dense(2)).unwrap();
        let all = ProjectionFamily::constant(Projector::diag(&[true, true]));
        let none = fit_constants(
            &id,
            &all,
            w(-20, 20),
            &[0.3, ln2(), 1.0],
            &Probes::default(),
            NormKind::L2,
        )
        .unwrap();
        assert_eq!(none, None);

        let (s, p) = shift();
        let got = fit_constants(&s, &p, w(-20, 20), &[ln2()], &Probes::default(), NormKind::L2)
            .unwrap()
            .unwrap();
        assert_eq!(got.0, ln2());
        assert!((got.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tail_depth_is_minimal() {
        assert_eq!(tail_depth(1.0, ln2(), 0.0, 1e-9), 1);
        assert_eq!(tail_depth(1.0, ln2(), 0.05, 1e-9), 27);
        assert_eq!(tail_depth(1.0, ln2(), 0.05, 1e-6), 17);
    }

    #[test]
    fn orbit_witnesses() {
        let (seq, _) = exchange();
        let e2 = Vector::dense(vec![0.0, 1.0]);
        match check_full_orbit_bounded(&seq, &e2, w(-30, 30), 1.5, NormKind::L2).unwrap() {
            OrbitCheck::Bounded { max_norm, .. } => assert_eq!(max_norm, 1.0),
            other => panic!("{other:?}"),
        }
        let e1 = Vector::dense(vec![1.0, 0.0]);
        assert_eq!(
            check_full_orbit_bounded(&seq, &e1, w(-30, 30), 1.5, NormKind::L2).unwrap(),
            OrbitCheck::Unbounded { first_exit: -1 }
        );
        let (s, _) = shift();
        assert!(matches!(
            check_full_orbit_bounded(&s, &Vector::delta(0), w(-30, 30), 1.5, NormKind::L2).unwrap(),
            OrbitCheck::Bounded { .. }
        ));
        assert!(check_full_orbit_bounded(&seq, &Vector::zeros(2), w(-3, 3), 1.5, NormKind::L2).is_err());
    }

    #[test]
    fn range_distance_dense_and_sparse() {
        let (seq, proj) = exchange();
        let v = Vector::dense(vec![0.3, 0.7]);
        // n = -1: S(-1) = span(e1), U(0) = {0}
        assert_eq!(
            range_distance(&seq, &proj, -1, &v, NormKind::L2).unwrap(),
            RangeDistance::Distance(0.7)
        );
        // n = -2: span(e1) + A⁻¹ span(e2) is everything
        assert_eq!(
            range_distance(&seq, &proj, -2, &v, NormKind::L2).unwrap(),
            RangeDistance::Distance(0.0)
        );
        let (s, p) = shift();
        // indices <= 0 together with {2, 3, ...}: only index 1 is outside
        let x = Vector::sparse([(1, 0.25), (2, 1.0), (-4, 1.0)]);
        assert_eq!(
            range_distance(&s, &p, 0, &x, NormKind::L2).unwrap(),
            RangeDistance::Distance(0.25)
        );
    }
}
