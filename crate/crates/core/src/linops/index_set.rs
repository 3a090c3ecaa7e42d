use std::fmt;

/// A set of integer indices stored as sorted, disjoint, non-adjacent closed
/// intervals. `i64::MIN` / `i64::MAX` endpoints stand for ∓∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet {
    intervals: Vec<(i64, i64)>,
}

const NEG_INF: i64 = i64::MIN;
const POS_INF: i64 = i64::MAX;

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { intervals: vec![] }
    }

    pub fn all() -> Self {
        IndexSet {
            intervals: vec![(NEG_INF, POS_INF)],
        }
    }

    pub fn at_most(k: i64) -> Self {
        IndexSet {
            intervals: vec![(NEG_INF, k)],
        }
    }

    pub fn at_least(k: i64) -> Self {
        IndexSet {
            intervals: vec![(k, POS_INF)],
        }
    }

    pub fn range(lo: i64, hi: i64) -> Self {
        Self::from_intervals(vec![(lo, hi)])
    }

    pub fn from_intervals(mut raw: Vec<(i64, i64)>) -> Self {
        raw.retain(|(a, b)| a <= b);
        raw.sort_unstable();
        let mut intervals: Vec<(i64, i64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match intervals.last_mut() {
                Some(last) if a <= last.1.saturating_add(1) => last.1 = last.1.max(b),
                _ => intervals.push((a, b)),
            }
        }
        IndexSet { intervals }
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    pub fn contains(&self, i: i64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= i && i <= b)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_all(&self) -> bool {
        self.intervals == [(NEG_INF, POS_INF)]
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        // first index not yet known to be covered
        let mut start = NEG_INF;
        for &(a, b) in &self.intervals {
            if a > start {
                out.push((start, a - 1));
            }
            if b == POS_INF {
                return Self::from_intervals(out);
            }
            start = b + 1;
        }
        out.push((start, POS_INF));
        Self::from_intervals(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.intervals.iter().chain(&other.intervals).copied().collect())
    }

    /// {i + k : i ∈ self}; infinite endpoints stay infinite.
    pub fn shifted(&self, k: i64) -> Self {
        let mv = |x: i64| {
            if x == NEG_INF || x == POS_INF {
                x
            } else {
                x + k
            }
        };
        Self::from_intervals(self.intervals.iter().map(|&(a, b)| (mv(a), mv(b))).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.intervals
            .iter()
            .all(|&(a, b)| other.intervals.iter().any(|&(c, d)| c <= a && b <= d))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return f.write_str("{}");
        }
        let end = |x: i64| match x {
            NEG_INF => "-inf".to_string(),
            POS_INF => "inf".to_string(),
            x => x.to_string(),
        };
        let parts: Vec<String> = self
            .intervals
            .iter()
            .map(|&(a, b)| format!("[{}, {}]", end(a), end(b)))
            .collect();
        f.write_str(&parts.join(" ∪ "))
    }
}
