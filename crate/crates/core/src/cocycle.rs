//! Two-sided operator sequences and the linear cocycle 𝒜(m, n).

use crate::error::{Error, Result};
use crate::linops::{NormKind, Operator, Space, Vector};
use crate::scalar::Real;

/// Closed integer time window [start, end].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Result<Self> {
        if start > end {
            return Err(Error::EmptyWindow { start, end });
        }
        Ok(Window { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        self.start <= n && n <= self.end
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = i64> {
        self.start..=self.end
    }
}

/// Total map n ↦ letter index of an itinerary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexMap {
    /// letter(n) = pattern[(n - phase) mod len].
    Periodic { pattern: Vec<usize>, phase: i64 },
    /// Explicit letters on [start, start + len), constant outside.
    Windowed {
        start: i64,
        letters: Vec<usize>,
        before: usize,
        after: usize,
    },
}

impl IndexMap {
    pub fn letter(&self, n: i64) -> usize {
        match self {
            IndexMap::Periodic { pattern, phase } => pattern[(n - phase).rem_euclid(pattern.len() as i64) as usize],
            IndexMap::Windowed {
                start,
                letters,
                before,
                after,
            } => {
                if n < *start {
                    *before
                } else {
                    letters.get((n - start) as usize).copied().unwrap_or(*after)
                }
            }
        }
    }

    fn letters(&self) -> Vec<usize> {
        match self {
            IndexMap::Periodic { pattern, .. } => pattern.clone(),
            IndexMap::Windowed {
                letters, before, after, ..
            } => letters.iter().chain([before, after]).copied().collect(),
        }
    }

    /// Times at which `letter` sits at two consecutive indices, if any.
    pub fn first_repeat_of(&self, letter: usize) -> Option<i64> {
        match self {
            IndexMap::Periodic { pattern, phase } => {
                let len = pattern.len();
                (0..len)
                    .find(|&i| pattern[i] == letter && pattern[(i + 1) % len] == letter)
                    .map(|i| phase + i as i64)
            }
            IndexMap::Windowed { start, letters, .. } => {
                // the constant tails are covered by checking one index past each end
                let lo = start - 1;
                let hi = start + letters.len() as i64;
                (lo..=hi).find(|&n| self.letter(n) == letter && self.letter(n + 1) == letter)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceRule<T> {
    Constant(Operator<T>),
    /// ops[n - start] on the window, extended constantly by the end operators.
    Windowed {
        start: i64,
        ops: Vec<Operator<T>>,
    },
    Itinerary {
        alphabet: Vec<Operator<T>>,
        map: IndexMap,
    },
}

/// The rule n ↦ A_n generating the cocycle.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSequence<T> {
    rule: SequenceRule<T>,
    space: Space,
}

fn compatible<T: Real>(op: &Operator<T>, space: Space) -> bool {
    match (op, space) {
        (Operator::ScaledIdentity(_), _) => true,
        (Operator::WeightedShift(_), Space::Sparse) => true,
        (_, Space::Dense(d)) => op.dense_dim() == Some(d),
        _ => false,
    }
}

impl<T: Real> OperatorSequence<T> {
    pub fn new(rule: SequenceRule<T>, space: Space) -> Result<Self> {
        if let Space::Dense(0) = space {
            return Err(Error::Invalid("dense dimension must be >= 1".into()));
        }
        let ops: Vec<&Operator<T>> = match &rule {
            SequenceRule::Constant(op) => vec![op],
            SequenceRule::Windowed { ops, .. } => {
                if ops.is_empty() {
                    return Err(Error::Invalid("windowed sequence needs at least one operator".into()));
                }
                ops.iter().collect()
            }
            SequenceRule::Itinerary { alphabet, map } => {
                if let Some(bad) = map.letters().into_iter().find(|&l| l >= alphabet.len()) {
                    return Err(Error::Invalid(format!(
                        "itinerary letter {bad} outside alphabet of size {}",
                        alphabet.len()
                    )));
                }
                if let IndexMap::Periodic { pattern, .. } = map {
                    if pattern.is_empty() {
                        return Err(Error::Invalid("periodic itinerary needs a pattern".into()));
                    }
                }
                alphabet.iter().collect()
            }
        };
        if let Some(op) = ops.iter().find(|op| !compatible(op, space)) {
            return Err(Error::ShapeMismatch {
                left: space.to_string(),
                right: op.kind().to_string(),
            });
        }
        Ok(OperatorSequence { rule, space })
    }

    pub fn constant(op: Operator<T>, space: Space) -> Result<Self> {
        Self::new(SequenceRule::Constant(op), space)
    }

    pub fn windowed(start: i64, ops: Vec<Operator<T>>, space: Space) -> Result<Self> {
        Self::new(SequenceRule::Windowed { start, ops }, space)
    }

    pub fn itinerary(alphabet: Vec<Operator<T>>, map: IndexMap, space: Space) -> Result<Self> {
        Self::new(SequenceRule::Itinerary { alphabet, map }, space)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn rule(&self) -> &SequenceRule<T> {
        &self.rule
    }

    /// A_n.
    pub fn at(&self, n: i64) -> &Operator<T> {
        match &self.rule {
            SequenceRule::Constant(op) => op,
            SequenceRule::Windowed { start, ops } => {
                let i = (n - start).clamp(0, ops.len() as i64 - 1);
                &ops[i as usize]
            }
            SequenceRule::Itinerary { alphabet, map } => &alphabet[map.letter(n)],
        }
    }

    /// Every operator the rule can produce.
    pub fn distinct_operators(&self) -> Vec<&Operator<T>> {
        match &self.rule {
            SequenceRule::Constant(op) => vec![op],
            SequenceRule::Windowed { ops, .. } => ops.iter().collect(),
            SequenceRule::Itinerary { alphabet, .. } => alphabet.iter().collect(),
        }
    }

    /// x ↦ A_n x, shapes assumed valid.
    pub(crate) fn step(&self, n: i64, v: &Vector<T>) -> Vector<T> {
        self.at(n).apply_unchecked(v, false)
    }

    /// x ↦ A_n⁻¹ x, shapes assumed valid.
    pub(crate) fn step_inverse(&self, n: i64, v: &Vector<T>) -> Vector<T> {
        self.at(n).apply_unchecked(v, true)
    }

    /// 𝒜(m, n) v: A_{m-1}⋯A_n v for m > n, v for m = n, A_m⁻¹⋯A_{n-1}⁻¹ v for m < n.
    pub fn transition(&self, m: i64, n: i64, v: &Vector<T>) -> Result<Vector<T>> {
        self.space.check(v)?;
        Ok(self.transition_unchecked(m, n, v))
    }

    pub(crate) fn transition_unchecked(&self, m: i64, n: i64, v: &Vector<T>) -> Vector<T> {
        let mut x = v.clone();
        if m >= n {
            for k in n..m {
                x = self.step(k, &x);
            }
        } else {
            for k in (m..n).rev() {
                x = self.step_inverse(k, &x);
            }
        }
        x
    }

    /// Points 𝒜(m, n) x for m = lo..=hi (n must lie in [lo, hi]).
    pub fn orbit(&self, n: i64, x: &Vector<T>, lo: i64, hi: i64) -> Result<Vec<Vector<T>>> {
        self.space.check(x)?;
        if !(lo <= n && n <= hi) {
            return Err(Error::Invalid(format!("base time {n} outside [{lo}, {hi}]")));
        }
        let mut back = Vec::with_capacity((n - lo) as usize);
        let mut cur = x.clone();
        for k in (lo..n).rev() {
            cur = self.step_inverse(k, &cur);
            back.push(cur.clone());
        }
        back.reverse();
        back.push(x.clone());
        let mut cur = x.clone();
        for k in n..hi {
            cur = self.step(k, &cur);
            back.push(cur.clone());
        }
        Ok(back)
    }

    /// ρ = max over the window of max(log‖A_n‖, log‖A_n⁻¹‖), clamped below at 0.
    pub fn growth_bound(&self, window: Window, p: NormKind) -> Result<T> {
        let mut rho = T::zero();
        for n in window.iter() {
            rho = rho.max(log_growth(self.at(n), p)?);
        }
        Ok(rho)
    }

    /// ρ over all of ℤ, exact because the rule is finitely described.
    pub fn global_growth_bound(&self, p: NormKind) -> Result<T> {
        let mut rho = T::zero();
        for op in self.distinct_operators() {
            rho = rho.max(log_growth(op, p)?);
        }
        Ok(rho)
    }

    /// sup_n ‖A_n⁻¹‖.
    pub fn sup_inverse_norm(&self, p: NormKind) -> Result<T> {
        let mut a = T::zero();
        for op in self.distinct_operators() {
            a = a.max(op.inverse_norm(p)?);
        }
        Ok(a)
    }
}

fn log_growth<T: Real>(op: &Operator<T>, p: NormKind) -> Result<T> {
    Ok(op.operator_norm(p)?.ln().max(op.inverse_norm(p)?.ln()))
}

/// Free-function form of [`OperatorSequence::transition`].
pub fn transition<T: Real>(seq: &OperatorSequence<T>, m: i64, n: i64, v: &Vector<T>) -> Result<Vector<T>> {
    seq.transition(m, n, v)
}
