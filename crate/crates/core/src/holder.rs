//! Hölder exponent budget α₀ = λ/ρ, the smallness conditions for α-Hölder
//! conjugacies, and empirical exponent estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conjugacy::ConjugacyProblem;
use crate::error::{Error, Result};
use crate::linops::{NormKind, Space, Vector};
use crate::scalar::Real;

/// α₀ = λ/ρ, or +∞ when ρ = 0 (no growth caps the exponent).
pub fn alpha_max<T: Real>(lambda: T, rho: T) -> T {
    if rho == T::zero() {
        T::infinity()
    } else {
        lambda / rho
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderBudget<T> {
    pub lambda: T,
    pub rho: T,
    pub d: T,
    pub m: T,
    pub c: T,
    pub alpha: T,
}

impl<T: Real> HolderBudget<T> {
    pub fn new(lambda: T, rho: T, d: T, m: T, c: T, alpha: T) -> Result<Self> {
        if !(lambda > T::zero() && rho >= T::zero() && d > T::zero() && m >= T::zero() && c >= T::zero()) {
            return Err(Error::Invalid("need λ > 0, ρ ≥ 0, D > 0, M ≥ 0, c ≥ 0".into()));
        }
        let a0 = alpha_max(lambda, rho);
        if !(alpha > T::zero() && alpha < a0) {
            return Err(Error::Invalid(format!(
                "α = {alpha} must lie in (0, α₀) with α₀ = {a0}"
            )));
        }
        Ok(HolderBudget {
            lambda,
            rho,
            d,
            m,
            c,
            alpha,
        })
    }

    pub fn from_problem(prob: &ConjugacyProblem<T>, alpha: T) -> Result<Self> {
        Self::new(
            prob.cert.lambda,
            prob.sys.rho,
            prob.cert.d,
            prob.sys.pert.bound(),
            prob.sys.pert.lipschitz(),
            alpha,
        )
    }

    pub fn alpha0(&self) -> T {
        alpha_max(self.lambda, self.rho)
    }

    /// M' = max(M, 1).
    pub fn m_prime(&self) -> T {
        self.m.max(T::one())
    }

    /// 2M'c^α, the Hölder constant of every f_n.
    pub fn f_holder_constant(&self) -> T {
        T::lit(2.0) * self.m_prime() * self.c.powf(self.alpha)
    }
}

/// Lipschitz bound (e^ρ + c)^steps of forward nonlinear steps.
pub fn forward_lipschitz<T: Real>(rho: T, c: T, steps: u32) -> T {
    (rho.exp() + c).powi(steps as i32)
}

/// Lipschitz bound (e^ρ/(1 − ce^ρ))^steps of backward nonlinear steps.
pub fn backward_lipschitz<T: Real>(rho: T, c: T, steps: u32) -> T {
    (rho.exp() / (T::one() - c * rho.exp())).powi(steps as i32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport<T> {
    pub alpha0: T,
    pub c_in_range: bool,
    pub backward_ok: bool,
    /// 1 − c·e^ρ.
    pub backward_margin: T,
    /// Ratios of the two geometric series inside L.
    pub ratio_forward: T,
    pub ratio_backward: T,
    pub l_finite: bool,
    pub l: Option<T>,
    pub k_threshold: T,
    pub k_ok: bool,
    /// 1 − threshold.
    pub k_margin: T,
    /// Hölder constant of h, reported only when the invariance inequality holds.
    pub k: Option<T>,
    pub passed: bool,
}

pub fn holder_smallness<T: Real>(b: &HolderBudget<T>) -> HolderReport<T> {
    let (l, rho, c, a) = (b.lambda, b.rho, b.c, b.alpha);
    let er = rho.exp();
    let ca = c.powf(a);
    let mp = b.m_prime();
    let backward_margin = T::one() - c * er;
    let backward_ok = backward_margin > T::zero();
    let ratio_forward = (-l).exp() * (er + c).powf(a);
    let ratio_backward = if backward_ok {
        (-l).exp() * (er / backward_margin).powf(a)
    } else {
        T::infinity()
    };
    let l_finite = ratio_forward < T::one() && ratio_backward < T::one();
    let l_value = l_finite.then(|| {
        T::lit(2.0)
            * mp
            * b.d
            * ca
            * (T::one() / (T::one() - ratio_forward) + ratio_backward / (T::one() - ratio_backward))
    });
    let g = (-l + a * rho).exp();
    let k_threshold = T::lit(4.0) * mp * b.d * ca * (a * rho).exp() * (T::one() + g) / (T::one() - g);
    let k_ok = k_threshold <= T::one();
    let c_in_range = c >= T::zero() && c <= T::one();
    let passed = c_in_range && backward_ok && l_finite && k_ok;
    HolderReport {
        alpha0: b.alpha0(),
        c_in_range,
        backward_ok,
        backward_margin,
        ratio_forward,
        ratio_backward,
        l_finite,
        l: l_value,
        k_threshold,
        k_ok,
        k_margin: T::one() - k_threshold,
        k: (passed).then(T::one),
        passed,
    }
}

/// One row of an empirical Hölder table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderRow<T> {
    pub scale: T,
    pub max_diff: T,
    /// Slope between this scale and the previous kept one.
    pub slope_window: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderEstimate<T> {
    /// Least-squares slope of log max_diff against log scale.
    pub slope: T,
    pub rows: Vec<HolderRow<T>>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderSampling {
    pub pairs_per_scale: usize,
    /// Radius of the ball around the center where base points are drawn.
    pub radius: f64,
    pub seed: u64,
}

fn random_unit<T: Real>(rng: &mut ChaCha8Rng, space: Space, coords: &[i64], p: NormKind) -> Vector<T> {
    loop {
        let v = match space {
            Space::Dense(d) => Vector::dense((0..d).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()),
            Space::Sparse => Vector::sparse(
                coords
                    .iter()
                    .map(|i| (*i, T::lit(rng.gen_range(-1.0..1.0))))
                    .collect::<Vec<_>>(),
            ),
        };
        let n = v.norm(p);
        if n > T::lit(1e-3) {
            return v.scale(T::one() / n);
        }
    }
}

/// Worst-case ‖H_n(x) − H_n(y)‖ over pairs with ‖x − y‖ = s, per scale.
pub fn empirical_holder<T: Real>(
    prob: &ConjugacyProblem<T>,
    n: i64,
    x_center: &Vector<T>,
    scales: &[T],
    sampling: &HolderSampling,
) -> Result<HolderEstimate<T>> {
    let space = prob.sys.seq.space();
    space.check(x_center)?;
    if scales.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Invalid("scales must be strictly descending".into()));
    }
    if sampling.pairs_per_scale == 0 {
        return Err(Error::Invalid("need at least one pair per scale".into()));
    }
    let p = prob.cert.norm;
    let coords: Vec<i64> = match x_center.support() {
        Some((a, b)) => (a.min(-4)..=b.max(4)).collect(),
        None => (-4..=4).collect(),
    };
    let floor = T::lit(10.0) * prob.h_err_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut warnings = Vec::new();
    let mut kept: Vec<(T, T)> = Vec::new();
    for &s in scales {
        if !(s > floor) {
            warnings.push(format!("scale {s} dropped: below noise floor {floor}"));
            continue;
        }
        let mut worst = T::zero();
        for _ in 0..sampling.pairs_per_scale {
            let r = T::lit(rng.gen_range(0.0..=sampling.radius));
            let x = x_center.axpy(r, &random_unit(&mut rng, space, &coords, p));
            let y = x.axpy(s, &random_unit(&mut rng, space, &coords, p));
            let (hx, _) = prob.h_map(n, &x)?;
            let (hy, _) = prob.h_map(n, &y)?;
            worst = worst.max(hx.dist(&hy, p));
        }
        if worst > T::zero() {
            kept.push((s, worst));
        } else {
            warnings.push(format!("scale {s} dropped: zero difference"));
        }
    }
    if kept.len() < 2 {
        return Err(Error::Invalid("fewer than two usable scales for a slope".into()));
    }
    let logs: Vec<(T, T)> = kept.iter().map(|(s, d)| (s.ln(), d.ln())).collect();
    let k = T::lit(logs.len() as f64);
    let mx = logs.iter().map(|l| l.0).sum::<T>() / k;
    let my = logs.iter().map(|l| l.1).sum::<T>() / k;
    let sxy: T = logs.iter().map(|(a, b)| (*a - mx) * (*b - my)).sum();
    let sxx: T = logs.iter().map(|(a, _)| (*a - mx) * (*a - mx)).sum();
    let rows = kept
        .iter()
        .enumerate()
        .map(|(i, &(scale, max_diff))| HolderRow {
            scale,
            max_diff,
            slope_window: (i > 0).then(|| (logs[i].1 - logs[i - 1].1) / (logs[i].0 - logs[i - 1].0)),
        })
        .collect();
    Ok(HolderEstimate {
        slope: sxy / sxx,
        rows,
        warnings,
    })
}
