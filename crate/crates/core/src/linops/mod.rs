//! State-space vectors, norms and invertible linear operators.

mod index_set;
mod matrix;
mod operator;
mod vector;

pub use index_set::IndexSet;
pub use matrix::{Lu, Matrix};
pub use operator::{operator_norm, Operator, WeightRule};
pub use vector::{NormKind, Space, Vector};

/// Roundtrip tolerance of `apply_inverse ∘ apply`, relative to 1 + ‖v‖.
pub const ROUNDTRIP_TOL: f64 = 1e-12;
