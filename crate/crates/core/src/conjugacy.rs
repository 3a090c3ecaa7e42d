//! Per-query construction of the conjugacies H_n = Id + h_n and
//! H̄_n = Id + h̄_n, and the residual checks that certify them.

use crate::dichotomy::{green_sum, range_distance, tail_depth, DichotomyCertificate, RangeDistance};
use crate::error::{Error, Result};
use crate::linops::Vector;
use crate::perturbation::{NonlinearSystem, PerturbationSequence};
use crate::scalar::Real;

const PICARD_CAP: usize = 10_000;
const OVERFLOW_NORM: f64 = 1e150;

/// Outcome of the contraction test for 𝒯.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smallness<T> {
    pub passed: bool,
    /// q = c·D·(1+e^{-λ})/(1-e^{-λ}).
    pub q: T,
    /// The c at which q reaches 1.
    pub c_star: T,
}

pub fn smallness_check<T: Real>(c: T, d: T, lambda: T) -> Smallness<T> {
    let e = (-lambda).exp();
    let factor = d * (T::one() + e) / (T::one() - e);
    let q = c * factor;
    Smallness {
        passed: q < T::one(),
        q,
        c_star: T::one() / factor,
    }
}

/// Smallest N ≥ 1 with D·M·e^{-λN}/(1-e^{-λ}) ≤ tail_tol.
pub fn truncation_window<T: Real>(d: T, lambda: T, m: T, tail_tol: T) -> usize {
    tail_depth(d, lambda, m, tail_tol)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Budget for each discarded series tail.
    pub tail_tol: T,
    /// Target distance of the Picard iterate to the truncated fixed point.
    pub iter_tol: T,
    /// Per-step tolerance of backward nonlinear solves.
    pub inv_tol: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            tail_tol: T::lit(1e-9),
            iter_tol: T::lit(1e-10),
            inv_tol: T::lit(1e-13),
        }
    }
}

/// A verified dichotomy plus a perturbation small enough for 𝒯 to contract.
#[derive(Clone, Debug)]
pub struct ConjugacyProblem<T> {
    pub sys: NonlinearSystem<T>,
    pub cert: DichotomyCertificate<T>,
    pub tol: Tolerances<T>,
    pub q: T,
    pub depth: usize,
    tail: T,
}

/// The orbit of one query together with the iterated values of h along it.
#[derive(Clone, Debug)]
pub struct OrbitTable<T> {
    pub base_time: i64,
    pub base_point: Vector<T>,
    /// Time of `points[0]`.
    pub start: i64,
    /// x_m = 𝒜(m, n) x.
    pub points: Vec<Vector<T>>,
    /// h_m(x_m).
    pub values: Vec<Vector<T>>,
    pub last_change: T,
}

impl<T: Real> OrbitTable<T> {
    pub fn end(&self) -> i64 {
        self.start + self.points.len() as i64 - 1
    }

    pub fn point(&self, m: i64) -> &Vector<T> {
        &self.points[(m - self.start) as usize]
    }

    pub fn value(&self, m: i64) -> &Vector<T> {
        &self.values[(m - self.start) as usize]
    }
}

#[derive(Clone, Debug)]
pub struct HSolution<T> {
    pub value: Vector<T>,
    pub err_bound: T,
    pub iterations: usize,
    /// Sup-norm change of the table per sweep.
    pub sup_changes: Vec<T>,
    pub table: OrbitTable<T>,
}

#[derive(Clone, Debug)]
pub struct HbarSolution<T> {
    pub value: Vector<T>,
    pub err_bound: T,
    /// Largest accumulated error of a backward orbit point.
    pub backward_error: T,
}

/// A residual with the bound it must respect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual<T> {
    pub value: T,
    pub bound: T,
}

impl<T: Real> Residual<T> {
    pub fn within(&self) -> bool {
        self.value <= self.bound
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseResiduals<T> {
    /// ‖H̄_n(H_n x) − x‖.
    pub r1: Residual<T>,
    /// ‖H_n(H̄_n x) − x‖.
    pub r2: Residual<T>,
}

fn overflow<T: Real>(time: i64, direction: &'static str, v: &Vector<T>, p: crate::linops::NormKind) -> Result<()> {
    let norm = v.norm(p);
    if norm.is_finite() && norm <= T::lit(OVERFLOW_NORM) {
        Ok(())
    } else {
        Err(Error::OrbitOverflow {
            time,
            direction,
            norm: norm.as_f64(),
        })
    }
}

impl<T: Real> ConjugacyProblem<T> {
    /// Refuses unverified certificates and q ≥ 1.
    pub fn new(cert: DichotomyCertificate<T>, pert: PerturbationSequence<T>, tol: Tolerances<T>) -> Result<Self> {
        cert.require_verified()?;
        if !(tol.tail_tol > T::zero() && tol.iter_tol > T::zero() && tol.inv_tol > T::zero()) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        let s = smallness_check(pert.lipschitz(), cert.d, cert.lambda);
        if !s.passed {
            return Err(Error::Smallness {
                q: s.q.as_f64(),
                c_star: s.c_star.as_f64(),
            });
        }
        let depth = truncation_window(cert.d, cert.lambda, pert.bound(), tol.tail_tol);
        let sys = NonlinearSystem::new(cert.seq.clone(), pert, cert.norm)?;
        let mut prob = ConjugacyProblem {
            sys,
            cert,
            tol,
            q: s.q,
            depth,
            tail: T::zero(),
        };
        prob.tail = prob.tail_for(depth);
        Ok(prob)
    }

    /// Overrides the truncation depth; error bounds follow the actual tail.
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth.max(1);
        self.tail = self.tail_for(self.depth);
        self
    }

    fn tail_for(&self, depth: usize) -> T {
        let e = (-self.cert.lambda).exp();
        self.cert.d * self.m() * (-self.cert.lambda * T::lit(depth as f64)).exp() / (T::one() - e)
    }

    fn c(&self) -> T {
        self.sys.pert.lipschitz()
    }

    fn m(&self) -> T {
        self.sys.pert.bound()
    }

    /// Bound on one discarded series tail at the chosen depth.
    pub fn tail_bound(&self) -> T {
        self.tail
    }

    /// err_bound of every [`solve_h`](Self::solve_h) result.
    pub fn h_err_bound(&self) -> T {
        self.tol.iter_tol + T::lit(2.0) * self.tail / (T::one() - self.q)
    }

    /// D·M·(1+e^{-λ})/(1-e^{-λ}), the a-priori bound on ‖h_n‖.
    pub fn uniform_bound(&self) -> T {
        let e = (-self.cert.lambda).exp();
        self.cert.d * self.m() * (T::one() + e) / (T::one() - e)
    }

    /// Lipschitz bound of the truncated h̄_n series.
    pub fn hbar_lipschitz(&self) -> T {
        let (c, d, l, rho) = (self.c(), self.cert.d, self.cert.lambda, self.sys.rho);
        if c == T::zero() {
            return T::zero();
        }
        let b = rho.exp() / (T::one() - c * rho.exp());
        let f = rho.exp() + c;
        let n = self.depth as i32;
        let lower: T = (1..=n + 1)
            .map(|j| (-l * T::lit((j - 1) as f64)).exp() * b.powi(j))
            .sum();
        let upper: T = (0..n).map(|j| (-l * T::lit((j + 1) as f64)).exp() * f.powi(j)).sum();
        c * d * (lower + upper)
    }

    /// Lipschitz estimate of h_n at the center of its table.
    pub fn h_lipschitz(&self) -> T {
        let (c, d, l, rho) = (self.c(), self.cert.d, self.cert.lambda, self.sys.rho);
        let n = self.depth as i32;
        let lower: T = (0..=n)
            .map(|j| (-l * T::lit(j as f64) + rho * T::lit((j + 1) as f64)).exp())
            .sum();
        let upper: T = (1..=n)
            .map(|j| (-l * T::lit(j as f64) + rho * T::lit((j - 1) as f64)).exp())
            .sum();
        c * d * (lower + upper) / (T::one() - self.q)
    }

    fn orbit_table(&self, n: i64, x: &Vector<T>, init: impl Fn(i64, &Vector<T>) -> Vector<T>) -> Result<OrbitTable<T>> {
        let seq = &self.sys.seq;
        seq.space().check(x)?;
        let nd = self.depth as i64;
        let (lo, hi) = (n - 2 * nd - 1, n + 2 * nd);
        let p = self.cert.norm;
        let mut back = Vec::with_capacity((n - lo) as usize);
        let mut cur = x.clone();
        for k in (lo..n).rev() {
            cur = seq.step_inverse(k, &cur);
            overflow(k, "backward", &cur, p)?;
            back.push(cur.clone());
        }
        back.reverse();
        back.push(x.clone());
        let mut cur = x.clone();
        for k in n..hi {
            cur = seq.step(k, &cur);
            overflow(k + 1, "forward", &cur, p)?;
            back.push(cur.clone());
        }
        let values = (lo..=hi).zip(&back).map(|(m, pt)| init(m, pt)).collect();
        Ok(OrbitTable {
            base_time: n,
            base_point: x.clone(),
            start: lo,
            points: back,
            values,
            last_change: T::infinity(),
        })
    }

    /// h_n(x) by Jacobi-Picard sweeps of the truncated 𝒯 over the orbit table.
    pub fn solve_h(&self, n: i64, x: &Vector<T>) -> Result<HSolution<T>> {
        let zero = self.sys.seq.space().zero();
        self.solve_h_from(n, x, |_, _| zero.clone())
    }

    /// As [`solve_h`](Self::solve_h) but starting from `init(m, x_m)` in every slot.
    pub fn solve_h_from(
        &self,
        n: i64,
        x: &Vector<T>,
        init: impl Fn(i64, &Vector<T>) -> Vector<T>,
    ) -> Result<HSolution<T>> {
        let mut table = self.orbit_table(n, x, init)?;
        let (lo, hi) = (table.start, table.end());
        let nd = self.depth as i64;
        let p = self.cert.norm;
        let stop = self.tol.iter_tol * (T::one() - self.q);
        let mut sup_changes = Vec::new();
        for it in 1..=PICARD_CAP {
            // g[j - lo] = f_j(x_j + h_j), the forcing term g_{j+1}; split
            // evaluation keeps the map smooth in h where x_j is huge
            let g: Vec<Vector<T>> = (lo..=hi)
                .map(|j| self.sys.pert.eval_offset(j, table.point(j), table.value(j)))
                .collect();
            let next: Vec<Vector<T>> = (lo..=hi)
                .map(|m| {
                    let k_lo = (m - nd).max(lo + 1);
                    let k_hi = (m + nd).min(hi + 1);
                    green_sum(&self.sys.seq, &self.cert.proj, m, k_lo, k_hi, |k| {
                        g[(k - 1 - lo) as usize].clone()
                    })
                })
                .collect();
            let change = next
                .iter()
                .zip(&table.values)
                .map(|(a, b)| a.dist(b, p))
                .fold(T::zero(), T::max);
            table.values = next;
            table.last_change = change;
            sup_changes.push(change);
            if change <= stop {
                return Ok(HSolution {
                    value: table.value(n).clone(),
                    err_bound: self.h_err_bound(),
                    iterations: it,
                    sup_changes,
                    table,
                });
            }
            if !change.is_finite() {
                break;
            }
        }
        Err(Error::IterationCap {
            iterations: sup_changes.len(),
            residual: table.last_change.as_f64(),
        })
    }

    /// h̄_n(x) from the explicit series over the nonlinear orbit ℱ(k−1, n)x.
    pub fn solve_hbar(&self, n: i64, x: &Vector<T>) -> Result<HbarSolution<T>> {
        let sys = &self.sys;
        sys.seq.space().check(x)?;
        let kappa = sys.backward_factor();
        if !(kappa < T::one()) {
            return Err(Error::BackwardContraction { value: kappa.as_f64() });
        }
        let nd = self.depth as i64;
        let p = self.cert.norm;
        let (lo, hi) = (n - nd - 1, n + nd - 1);
        let b = sys.rho.exp() / (T::one() - kappa);

        // y[j - lo] = ℱ(j, n)x with accumulated error delta[j - lo]
        let mut back = Vec::with_capacity((n - lo) as usize);
        let mut errs = Vec::with_capacity((n - lo) as usize);
        let (mut cur, mut delta) = (x.clone(), T::zero());
        for j in (lo..n).rev() {
            let s = sys.inverse_step(j, &cur, self.tol.inv_tol)?;
            cur = s.value;
            delta = b * delta + s.error;
            overflow(j, "backward", &cur, p)?;
            back.push(cur.clone());
            errs.push(delta);
        }
        back.reverse();
        errs.reverse();
        back.push(x.clone());
        errs.push(T::zero());
        let mut cur = x.clone();
        for j in n..hi {
            cur = sys.forward_step(j, &cur);
            overflow(j + 1, "forward", &cur, p)?;
            back.push(cur.clone());
            errs.push(T::zero());
        }

        let g = |k: i64| sys.pert.eval(k - 1, &back[(k - 1 - lo) as usize]);
        let value = green_sum(&sys.seq, &self.cert.proj, n, n - nd, n + nd, g).scale(-T::one());
        let c = self.c();
        let propagated: T = (n - nd..=n)
            .map(|k| self.cert.d * (-self.cert.lambda * T::lit((n - k) as f64)).exp() * c * errs[(k - 1 - lo) as usize])
            .sum();
        Ok(HbarSolution {
            value,
            err_bound: T::lit(2.0) * self.tail + propagated,
            backward_error: errs.iter().copied().fold(T::zero(), T::max),
        })
    }

    /// H_n(x) = x + h_n(x), with its error bound.
    pub fn h_map(&self, n: i64, x: &Vector<T>) -> Result<(Vector<T>, T)> {
        let s = self.solve_h(n, x)?;
        Ok((x.add(&s.value), s.err_bound))
    }

    /// H̄_n(x) = x + h̄_n(x), with its error bound.
    pub fn hbar_map(&self, n: i64, x: &Vector<T>) -> Result<(Vector<T>, T)> {
        let s = self.solve_hbar(n, x)?;
        Ok((x.add(&s.value), s.err_bound))
    }

    /// ‖H_{n+1}(A_n x) − (A_n + f_n)(H_n x)‖.
    pub fn conjugacy_residual(&self, n: i64, x: &Vector<T>) -> Result<Residual<T>> {
        let ax = self.sys.seq.transition(n + 1, n, x)?;
        let (lhs, e1) = self.h_map(n + 1, &ax)?;
        let (hx, e0) = self.h_map(n, x)?;
        let rhs = self.sys.forward_step(n, &hx);
        let amp = self.sys.rho.exp() + self.c();
        Ok(Residual {
            value: lhs.dist(&rhs, self.cert.norm),
            bound: e1 + amp * e0,
        })
    }

    /// Both compositions of H_n and H̄_n against the identity.
    pub fn inverse_residual(&self, n: i64, x: &Vector<T>) -> Result<InverseResiduals<T>> {
        let p = self.cert.norm;
        let (y, eh) = self.h_map(n, x)?;
        let (z, ehb_y) = self.hbar_map(n, &y)?;
        let (w, ehb) = self.hbar_map(n, x)?;
        let (v, eh_w) = self.h_map(n, &w)?;
        Ok(InverseResiduals {
            r1: Residual {
                value: z.dist(x, p),
                bound: (T::one() + self.hbar_lipschitz()) * eh + ehb_y,
            },
            r2: Residual {
                value: v.dist(x, p),
                bound: (T::one() + self.h_lipschitz()) * ehb + eh_w,
            },
        })
    }

    /// Distance of h_n(x) to S(n) + A_n⁻¹U(n+1).
    pub fn range_check(&self, n: i64, x: &Vector<T>) -> Result<RangeDistance<T>> {
        let h = self.solve_h(n, x)?;
        range_distance(&self.sys.seq, &self.cert.proj, n, &h.value, self.cert.norm)
    }
}
