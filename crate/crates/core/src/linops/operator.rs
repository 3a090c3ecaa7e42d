use crate::error::{Error, Result};
use crate::scalar::Real;

use super::matrix::{Lu, Matrix};
use super::vector::{NormKind, Vector};

/// Weight rule n ↦ ω_n of a bilateral weighted shift, finitely described so
/// that inf and sup are exact.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightRule<T> {
    Constant(T),
    /// ω_n = `at_or_below` for n ≤ `crossing`, `above` for n > `crossing`.
    Step {
        crossing: i64,
        at_or_below: T,
        above: T,
    },
    /// ω_n = values[n - start] on the window, `before`/`after` outside it.
    Windowed {
        start: i64,
        values: Vec<T>,
        before: T,
        after: T,
    },
}

impl<T: Real> WeightRule<T> {
    pub fn weight(&self, n: i64) -> T {
        match self {
            WeightRule::Constant(w) => *w,
            WeightRule::Step {
                crossing,
                at_or_below,
                above,
            } => {
                if n <= *crossing {
                    *at_or_below
                } else {
                    *above
                }
            }
            WeightRule::Windowed {
                start,
                values,
                before,
                after,
            } => {
                if n < *start {
                    *before
                } else {
                    values.get((n - start) as usize).copied().unwrap_or(*after)
                }
            }
        }
    }

    fn magnitudes(&self) -> Vec<T> {
        match self {
            WeightRule::Constant(w) => vec![w.abs()],
            WeightRule::Step { at_or_below, above, .. } => vec![at_or_below.abs(), above.abs()],
            WeightRule::Windowed {
                values, before, after, ..
            } => values.iter().chain([before, after]).map(|w| w.abs()).collect(),
        }
    }

    pub fn inf_abs(&self) -> T {
        self.magnitudes().into_iter().fold(T::infinity(), T::min)
    }

    pub fn sup_abs(&self) -> T {
        self.magnitudes().into_iter().fold(T::zero(), T::max)
    }
}

/// An invertible bounded linear operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator<T> {
    Dense {
        matrix: Matrix<T>,
        lu: Lu<T>,
    },
    /// (S_ω x)_n = ω_{n+1} x_{n+1}.
    WeightedShift(WeightRule<T>),
    BlockDiagonal(Vec<Operator<T>>),
    ScaledIdentity(T),
}

impl<T: Real> Operator<T> {
    pub fn dense(matrix: Matrix<T>) -> Result<Self> {
        let lu = Lu::new(&matrix)?;
        Ok(Operator::Dense { matrix, lu })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::dense(Matrix::from_rows(rows)?)
    }

    pub fn diag(d: &[T]) -> Result<Self> {
        Self::dense(Matrix::diag(d))
    }

    pub fn identity() -> Self {
        Operator::ScaledIdentity(T::one())
    }

    pub fn scaled_identity(s: T) -> Result<Self> {
        if s == T::zero() || !s.is_finite() {
            return Err(Error::NotInvertible(format!("scaled identity with factor {s}")));
        }
        Ok(Operator::ScaledIdentity(s))
    }

    pub fn weighted_shift(weights: WeightRule<T>) -> Result<Self> {
        let (lo, hi) = (weights.inf_abs(), weights.sup_abs());
        if !(lo > T::zero()) || !hi.is_finite() {
            return Err(Error::NotInvertible(format!(
                "weighted shift needs 0 < inf|ω| and sup|ω| < ∞, got inf {lo}, sup {hi}"
            )));
        }
        Ok(Operator::WeightedShift(weights))
    }

    pub fn block_diagonal(blocks: Vec<Operator<T>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Invalid(
                "block-diagonal operator needs at least one block".into(),
            ));
        }
        if let Some(b) = blocks.iter().find(|b| b.dense_dim().is_none()) {
            return Err(Error::Invalid(format!(
                "block-diagonal blocks must have a fixed dimension, got {}",
                b.kind()
            )));
        }
        Ok(Operator::BlockDiagonal(blocks))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Operator::Dense { .. } => "dense-matrix",
            Operator::WeightedShift(_) => "weighted-shift",
            Operator::BlockDiagonal(_) => "block-diagonal",
            Operator::ScaledIdentity(_) => "scaled-identity",
        }
    }

    /// Dimension for operators tied to a dense space.
    pub fn dense_dim(&self) -> Option<usize> {
        match self {
            Operator::Dense { matrix, .. } => Some(matrix.dim()),
            Operator::BlockDiagonal(bs) => bs.iter().map(|b| b.dense_dim()).sum(),
            _ => None,
        }
    }

    fn shape(&self) -> String {
        match self.dense_dim() {
            Some(d) => format!("{} {d}x{d}", self.kind()),
            None => self.kind().to_string(),
        }
    }

    fn check(&self, v: &Vector<T>) -> Result<()> {
        let ok = match (self, v) {
            (Operator::ScaledIdentity(_), _) => true,
            (Operator::WeightedShift(_), Vector::Sparse(_)) => true,
            (_, Vector::Dense(x)) => self.dense_dim() == Some(x.len()),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: self.shape(),
                right: v.shape(),
            })
        }
    }

    pub fn apply(&self, v: &Vector<T>) -> Result<Vector<T>> {
        self.check(v)?;
        Ok(self.apply_unchecked(v, false))
    }

    pub fn apply_inverse(&self, v: &Vector<T>) -> Result<Vector<T>> {
        self.check(v)?;
        Ok(self.apply_unchecked(v, true))
    }

    pub(crate) fn apply_unchecked(&self, v: &Vector<T>, inverse: bool) -> Vector<T> {
        match self {
            Operator::ScaledIdentity(s) => {
                if inverse {
                    v.scale(T::one() / *s)
                } else {
                    v.scale(*s)
                }
            }
            Operator::Dense { matrix, lu } => {
                let x = v.as_dense().expect("checked");
                Vector::Dense(if inverse { lu.solve(x) } else { matrix.mul_vec(x) })
            }
            Operator::WeightedShift(w) => {
                let entries = v.entries().map(|(j, x)| {
                    if inverse {
                        // (S⁻¹x)_n = x_{n-1} / ω_n
                        (j + 1, x / w.weight(j + 1))
                    } else {
                        (j - 1, w.weight(j) * x)
                    }
                });
                Vector::sparse(entries.collect::<Vec<_>>())
            }
            Operator::BlockDiagonal(blocks) => {
                let x = v.as_dense().expect("checked");
                let mut out = Vec::with_capacity(x.len());
                let mut offset = 0;
                for b in blocks {
                    let d = b.dense_dim().expect("validated at construction");
                    let part = Vector::Dense(x[offset..offset + d].to_vec());
                    if let Vector::Dense(y) = b.apply_unchecked(&part, inverse) {
                        out.extend(y);
                    }
                    offset += d;
                }
                Vector::Dense(out)
            }
        }
    }

    /// Induced operator norm ‖A‖_p.
    pub fn operator_norm(&self, p: NormKind) -> Result<T> {
        match self {
            Operator::ScaledIdentity(s) => Ok(s.abs()),
            Operator::WeightedShift(w) => Ok(w.sup_abs()),
            Operator::Dense { matrix, .. } => matrix.operator_norm(p),
            Operator::BlockDiagonal(bs) => bs
                .iter()
                .map(|b| b.operator_norm(p))
                .try_fold(T::zero(), |acc, n| Ok(acc.max(n?))),
        }
    }

    /// Induced norm of the inverse, ‖A⁻¹‖_p.
    pub fn inverse_norm(&self, p: NormKind) -> Result<T> {
        match self {
            Operator::ScaledIdentity(s) => Ok(T::one() / s.abs()),
            Operator::WeightedShift(w) => Ok(T::one() / w.inf_abs()),
            Operator::Dense { lu, .. } => lu.inverse().operator_norm(p),
            Operator::BlockDiagonal(bs) => bs
                .iter()
                .map(|b| b.inverse_norm(p))
                .try_fold(T::zero(), |acc, n| Ok(acc.max(n?))),
        }
    }

    /// Explicit matrix for dense-space operators of dimension `d`.
    pub fn to_matrix(&self, d: usize) -> Option<Matrix<T>> {
        match self {
            Operator::WeightedShift(_) => None,
            _ => {
                let cols: Vec<Vec<T>> = (0..d)
                    .map(|j| match self.apply(&Vector::basis(d, j)) {
                        Ok(Vector::Dense(c)) => Some(c),
                        _ => None,
                    })
                    .collect::<Option<_>>()?;
                let rows: Vec<Vec<T>> = (0..d).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
                Matrix::from_rows(&rows).ok()
            }
        }
    }
}

/// ‖A‖_p as a free function.
pub fn operator_norm<T: Real>(op: &Operator<T>, p: NormKind) -> Result<T> {
    op.operator_norm(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift() -> Operator<f64> {
        Operator::weighted_shift(WeightRule::Step {
            crossing: 0,
            at_or_below: 0.5,
            above: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn identity_is_identity() {
        let v = Vector::dense(vec![1.5, -2.0]);
        let id = Operator::identity();
        assert_eq!(id.apply(&v).unwrap(), v);
        assert_eq!(id.apply_inverse(&v).unwrap(), v);
        for p in [NormKind::L1, NormKind::L2, NormKind::Inf] {
            assert_eq!(id.operator_norm(p).unwrap(), 1.0);
        }
    }

    #[test]
    fn shift_moves_mass_left_with_weight() {
        let s = shift();
        assert_eq!(s.apply(&Vector::delta(1)).unwrap(), Vector::delta(0).scale(2.0));
        assert_eq!(s.apply_inverse(&Vector::delta(0)).unwrap(), Vector::delta(1).scale(0.5));
        for p in [NormKind::L1, NormKind::L2, NormKind::Inf] {
            assert_eq!(s.operator_norm(p).unwrap(), 2.0);
            assert_eq!(s.inverse_norm(p).unwrap(), 2.0);
        }
        // the norm is attained on δ₁
        assert_eq!(s.apply(&Vector::delta(1)).unwrap().norm(NormKind::L2), 2.0);
    }

    #[test]
    fn diagonal_action_and_norm() {
        let a = Operator::diag(&[0.5, 2.0]).unwrap();
        let v = Vector::dense(vec![1.0, 1.0]);
        assert_eq!(a.apply(&v).unwrap(), Vector::dense(vec![0.5, 2.0]));
        assert_eq!(a.apply_inverse(&v).unwrap(), Vector::dense(vec![2.0, 0.5]));
        assert_eq!(a.operator_norm(NormKind::L2).unwrap(), 2.0);
    }

    #[test]
    fn shape_errors_name_both_sides() {
        let a = Operator::diag(&[0.5, 2.0]).unwrap();
        let err = a.apply(&Vector::dense(vec![1.0, 2.0, 3.0])).unwrap_err();
        assert_eq!(
            err,
            Error::ShapeMismatch {
                left: "dense-matrix 2x2".into(),
                right: "dense(3)".into()
            }
        );
        assert!(shift().apply(&Vector::dense(vec![1.0])).is_err());
    }

    #[test]
    fn singular_dense_rejected() {
        let err = Operator::from_rows(&[vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
        assert!(Operator::weighted_shift(WeightRule::Constant(0.0)).is_err());
        assert!(Operator::<f64>::scaled_identity(0.0).is_err());
    }

    #[test]
    fn block_diagonal_acts_per_block() {
        let b = Operator::block_diagonal(vec![
            Operator::diag(&[2.0]).unwrap(),
            Operator::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ])
        .unwrap();
        let v = Vector::dense(vec![1.0, 2.0, 3.0]);
        assert_eq!(b.apply(&v).unwrap(), Vector::dense(vec![2.0, 3.0, 2.0]));
        assert_eq!(b.operator_norm(NormKind::Inf).unwrap(), 2.0);
        assert_eq!(b.inverse_norm(NormKind::Inf).unwrap(), 1.0);
        assert!(Operator::block_diagonal(vec![Operator::<f64>::identity()]).is_err());
    }
}
