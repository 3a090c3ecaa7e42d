use crate::error::{Error, Result};
use crate::scalar::Real;

use super::vector::NormKind;

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Invalid("matrix must have at least one row".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::ShapeMismatch {
                left: format!("{dim}x{dim}"),
                right: format!("row of length {}", bad.len()),
            });
        }
        Ok(Matrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![T::one(); dim])
    }

    pub fn diag(d: &[T]) -> Self {
        let dim = d.len();
        let mut data = vec![T::zero(); dim * dim];
        for (i, v) in d.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Matrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (i, xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + *a * *xi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        let n = self.dim;
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    data[i * n + j] = data[i * n + j] + a * other.get(k, j);
                }
            }
        }
        Matrix { dim: n, data }
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.get(i, j) == T::zero()))
    }

    /// Max column sum.
    pub fn norm_1(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Max row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Operator norm induced by ‖·‖_p. Exact for p ∈ {1, ∞} and for diagonal
    /// matrices; power iteration on AᵀA otherwise.
    pub fn operator_norm(&self, p: NormKind) -> Result<T> {
        if self.is_diagonal() {
            return Ok((0..self.dim).map(|i| self.get(i, i).abs()).fold(T::zero(), T::max));
        }
        match p {
            NormKind::L1 => Ok(self.norm_1()),
            NormKind::Inf => Ok(self.norm_inf()),
            NormKind::L2 => self.spectral_norm(),
        }
    }

    fn spectral_norm(&self) -> Result<T> {
        const MAX_ITER: usize = 10_000;
        // the Rayleigh estimate approaches σ_max from below, so converge tightly
        let tol = T::lit(1e-13).max(T::lit(8.0) * T::epsilon());
        let n = self.dim;
        // deterministic start with no special alignment
        let mut v: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.1 * i as f64)).collect();
        let mut estimate = T::zero();
        for _ in 0..MAX_ITER {
            let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
            if norm == T::zero() {
                return Ok(T::zero());
            }
            v.iter_mut().for_each(|x| *x = *x / norm);
            let w = self.transpose_mul_vec(&self.mul_vec(&v));
            let next = v.iter().zip(&w).map(|(a, b)| *a * *b).sum::<T>().sqrt();
            if (next - estimate).abs() <= tol * next {
                return Ok(next);
            }
            estimate = next;
            v = w;
        }
        Err(Error::NoConvergence {
            iterations: MAX_ITER,
            last: estimate.as_f64(),
        })
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// LU factorization with partial pivoting, PA = LU packed in one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    /// Fails when the smallest pivot is at most 1e-12 times the largest.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.dim;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, _) =
                (k..n)
                    .map(|i| (i, lu.get(i, k).abs()))
                    .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if piv != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let p = lu.get(k, k);
            if p == T::zero() {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            for i in k + 1..n {
                let l = lu.get(i, k) / p;
                lu.data[i * n + k] = l;
                for j in k + 1..n {
                    lu.data[i * n + j] = lu.data[i * n + j] - l * lu.get(k, j);
                }
            }
        }
        let pivots = (0..n).map(|i| lu.get(i, i).abs());
        let (lo, hi) = pivots.fold((T::infinity(), T::zero()), |(lo, hi), p| (lo.min(p), hi.max(p)));
        if lo <= T::lit(1e-12) * hi {
            return Err(Error::Singular {
                condition: (hi / lo).as_f64(),
            });
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.dim;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
            x[i] = x[i] / self.lu.get(i, i);
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.dim;
        let mut data = vec![T::zero(); n * n];
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                data[i * n + j] = v;
            }
        }
        Matrix { dim: n, data }
    }
}
