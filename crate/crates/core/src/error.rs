use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("matrix is numerically singular (pivot ratio {condition:e})")]
    Singular { condition: f64 },

    #[error("operator is not invertible: {0}")]
    NotInvertible(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("empty or too short window [{start}, {end}]")]
    EmptyWindow { start: i64, end: i64 },

    #[error("dichotomy certificate is not verified: {0}")]
    NotVerified(String),

    #[error("smallness condition violated: q = c·D·(1+e^-λ)/(1-e^-λ) = {q} >= 1 (threshold c* = {c_star})")]
    Smallness { q: f64, c_star: f64 },

    #[error("backward solve needs c·e^ρ < 1, got {value}")]
    BackwardContraction { value: f64 },

    #[error("fixed-point iteration hit the cap of {iterations} iterations (last step {residual:e})")]
    IterationCap { iterations: usize, residual: f64 },

    #[error("orbit diverged at time {time} ({direction}): norm {norm:e} exceeds 1e150")]
    OrbitOverflow {
        time: i64,
        direction: &'static str,
        norm: f64,
    },

    #[error("orbit is unbounded: first exit at time {time}")]
    UnboundedOrbit { time: i64 },

    #[error("rule violation: {0}")]
    Rule(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}
