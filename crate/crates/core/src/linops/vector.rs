use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The p in ‖·‖_p. Fixed for a whole experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum NormKind {
    L1,
    #[default]
    L2,
    Inf,
}

impl NormKind {
    pub fn from_p(p: u32) -> Option<Self> {
        match p {
            1 => Some(NormKind::L1),
            2 => Some(NormKind::L2),
            _ => None,
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::L1 => f.write_str("1"),
            NormKind::L2 => f.write_str("2"),
            NormKind::Inf => f.write_str("inf"),
        }
    }
}

/// State space a sequence acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// ℝ^d with d ≥ 1.
    Dense(usize),
    /// Finitely supported bilateral sequences, a dense subset of ℓ_p(ℤ) or c₀(ℤ).
    Sparse,
}

impl Space {
    pub fn check(&self, v: &Vector<impl Real>) -> Result<()> {
        match (self, v) {
            (Space::Dense(d), Vector::Dense(x)) if *d == x.len() => Ok(()),
            (Space::Sparse, Vector::Sparse(_)) => Ok(()),
            _ => Err(Error::ShapeMismatch {
                left: self.to_string(),
                right: v.shape(),
            }),
        }
    }

    pub fn zero<T: Real>(&self) -> Vector<T> {
        match self {
            Space::Dense(d) => Vector::zeros(*d),
            Space::Sparse => Vector::Sparse(BTreeMap::new()),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Dense(d) => write!(f, "dense({d})"),
            Space::Sparse => f.write_str("sparse-biseq"),
        }
    }
}

/// A point of the state space.
///
/// Sparse vectors never store entries with magnitude at or below
/// [`Real::drop_threshold`].
#[derive(Clone, Debug, PartialEq)]
pub enum Vector<T> {
    Dense(Vec<T>),
    Sparse(BTreeMap<i64, T>),
}

impl<T: Real> Vector<T> {
    pub fn dense(values: Vec<T>) -> Self {
        assert!(!values.is_empty(), "dense vectors need dimension >= 1");
        Vector::Dense(values)
    }

    pub fn zeros(d: usize) -> Self {
        Vector::dense(vec![T::zero(); d])
    }

    /// Standard basis vector e_j of ℝ^d (0-based).
    pub fn basis(d: usize, j: usize) -> Self {
        let mut v = vec![T::zero(); d];
        v[j] = T::one();
        Vector::Dense(v)
    }

    pub fn sparse<I: IntoIterator<Item = (i64, T)>>(entries: I) -> Self {
        let mut map = BTreeMap::new();
        for (i, x) in entries {
            let e = map.entry(i).or_insert_with(T::zero);
            *e = *e + x;
        }
        let mut v = Vector::Sparse(map);
        v.prune();
        v
    }

    /// Unit mass δ_j of a bilateral sequence.
    pub fn delta(j: i64) -> Self {
        Vector::sparse([(j, T::one())])
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Vector::Sparse(_))
    }

    pub fn shape(&self) -> String {
        match self {
            Vector::Dense(x) => format!("dense({})", x.len()),
            Vector::Sparse(m) => match (m.keys().next(), m.keys().next_back()) {
                (Some(a), Some(b)) => format!("sparse-biseq[{a}..={b}]"),
                _ => "sparse-biseq[]".to_string(),
            },
        }
    }

    pub fn space(&self) -> Space {
        match self {
            Vector::Dense(x) => Space::Dense(x.len()),
            Vector::Sparse(_) => Space::Sparse,
        }
    }

    /// Coordinate `i`; dense vectors use 0-based indices and read 0 out of range.
    pub fn get(&self, i: i64) -> T {
        match self {
            Vector::Dense(x) => usize::try_from(i)
                .ok()
                .and_then(|i| x.get(i).copied())
                .unwrap_or_else(T::zero),
            Vector::Sparse(m) => m.get(&i).copied().unwrap_or_else(T::zero),
        }
    }

    /// Stored (index, value) pairs.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (i64, T)> + '_> {
        match self {
            Vector::Dense(x) => Box::new(x.iter().enumerate().map(|(i, v)| (i as i64, *v))),
            Vector::Sparse(m) => Box::new(m.iter().map(|(i, v)| (*i, *v))),
        }
    }

    pub fn support(&self) -> Option<(i64, i64)> {
        match self {
            Vector::Dense(x) => Some((0, x.len() as i64 - 1)),
            Vector::Sparse(m) => Some((*m.keys().next()?, *m.keys().next_back()?)),
        }
    }

    pub fn as_dense(&self) -> Option<&[T]> {
        match self {
            Vector::Dense(x) => Some(x),
            Vector::Sparse(_) => None,
        }
    }

    pub(crate) fn prune(&mut self) {
        if let Vector::Sparse(m) = self {
            let eps = T::drop_threshold();
            m.retain(|_, v| v.abs() > eps);
        }
    }

    pub fn norm(&self, p: NormKind) -> T {
        let it = self.entries().map(|(_, v)| v.abs());
        match p {
            NormKind::L1 => it.sum(),
            NormKind::L2 => {
                // scaled to avoid overflow for long backward orbits
                let vals: Vec<T> = it.collect();
                let scale = vals.iter().copied().fold(T::zero(), T::max);
                if scale == T::zero() || !scale.is_finite() {
                    return scale;
                }
                let s: T = vals.iter().map(|v| (*v / scale) * (*v / scale)).sum();
                scale * s.sqrt()
            }
            NormKind::Inf => it.fold(T::zero(), T::max),
        }
    }

    pub fn scale(&self, a: T) -> Self {
        let mut out = match self {
            Vector::Dense(x) => Vector::Dense(x.iter().map(|v| *v * a).collect()),
            Vector::Sparse(m) => Vector::Sparse(m.iter().map(|(i, v)| (*i, *v * a)).collect()),
        };
        out.prune();
        out
    }

    /// self + a·other. Panics on mismatched shapes; callers validate at the API boundary.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        match (self, other) {
            (Vector::Dense(x), Vector::Dense(y)) => {
                assert_eq!(x.len(), y.len(), "dense dimension mismatch");
                Vector::Dense(x.iter().zip(y).map(|(u, v)| *u + a * *v).collect())
            }
            (Vector::Sparse(x), Vector::Sparse(y)) => {
                let mut m = x.clone();
                for (i, v) in y {
                    let e = m.entry(*i).or_insert_with(T::zero);
                    *e = *e + a * *v;
                }
                let mut out = Vector::Sparse(m);
                out.prune();
                out
            }
            _ => panic!("cannot combine {} with {}", self.shape(), other.shape()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    pub fn dist(&self, other: &Self, p: NormKind) -> T {
        self.sub(other).norm(p)
    }

    pub fn is_zero(&self) -> bool {
        self.entries().all(|(_, v)| v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.entries().all(|(_, v)| v.is_finite())
    }

    /// Coordinate filter: keeps entries whose index satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        match self {
            Vector::Dense(x) => Vector::Dense(
                x.iter()
                    .enumerate()
                    .map(|(i, v)| if keep(i as i64) { *v } else { T::zero() })
                    .collect(),
            ),
            Vector::Sparse(m) => Vector::Sparse(m.iter().filter(|(i, _)| keep(**i)).map(|(i, v)| (*i, *v)).collect()),
        }
    }
}
