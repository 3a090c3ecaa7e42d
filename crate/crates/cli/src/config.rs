//! JSON experiment configuration.

use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// 1, 2 or 0 for the sup norm.
    #[serde(default = "default_norm")]
    pub norm: u32,
    #[serde(default = "default_window")]
    pub window: [i64; 2],
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub queries: Option<QuerySpec>,
    #[serde(default)]
    pub holder: Option<HolderSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_norm() -> u32 {
    2
}

fn default_window() -> [i64; 2] {
    [-20, 20]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    DimensionExchange,
    Scalar {
        a: f64,
    },
    WeightedShift {
        weights: WeightSpec,
        stable_bound: f64,
        #[serde(default)]
        unstable_bound: Option<f64>,
        #[serde(default)]
        crossing: i64,
    },
    FamilySwitch {
        /// Dense matrices or weighted shifts, one per letter.
        letters: Vec<OperatorSpec>,
        lambdas: Vec<f64>,
        projector: ProjectorSpec,
        #[serde(default)]
        connector: Option<OperatorSpec>,
        pattern: Vec<usize>,
        #[serde(default)]
        phase: i64,
    },
    /// A_n = matrices[n - start], extended constantly; same for projections.
    Explicit {
        start: i64,
        matrices: Vec<Vec<Vec<f64>>>,
        projections: Vec<Vec<Vec<f64>>>,
        d: f64,
        lambda: f64,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        value: f64,
    },
    Step {
        crossing: i64,
        at_or_below: f64,
        above: f64,
    },
    Windowed {
        start: i64,
        values: Vec<f64>,
        before: f64,
        after: f64,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Matrix(Vec<Vec<f64>>),
    Shift { shift: WeightSpec },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProjectorSpec {
    /// Diagonal 0/1 mask for dense spaces.
    Mask(Vec<bool>),
    /// Keep the indices ≤ at_most (sparse spaces).
    AtMost { at_most: i64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Dense(Vec<f64>),
    Sparse { sparse: Vec<(i64, f64)> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    Const {
        value: f64,
    },
    Sin {
        coord: i64,
        #[serde(default = "one")]
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    Clamp {
        coord: i64,
        lo: f64,
        hi: f64,
    },
    Scaled {
        factor: f64,
        expr: Box<ExprSpec>,
    },
    Sum {
        terms: Vec<ExprSpec>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub direction: VectorSpec,
    pub profile: ExprSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub terms: Vec<TermSpec>,
    /// Periodic factors f_n = factors[(n - phase) mod len]; omitted means 1.
    #[serde(default)]
    pub factors: Option<Vec<f64>>,
    #[serde(default)]
    pub phase: i64,
    /// Declared Lipschitz constant; defaults to the value implied by the terms.
    #[serde(default)]
    pub c: Option<f64>,
    /// Declared sup bound; defaults to the value implied by the terms.
    #[serde(default)]
    pub m: Option<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_tail")]
    pub tail_tol: f64,
    #[serde(default = "default_iter")]
    pub iter_tol: f64,
    #[serde(default = "default_inv")]
    pub inv_tol: f64,
}

fn default_tail() -> f64 {
    1e-9
}

fn default_iter() -> f64 {
    1e-10
}

fn default_inv() -> f64 {
    1e-13
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            tail_tol: default_tail(),
            iter_tol: default_iter(),
            inv_tol: default_inv(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryPoint {
    pub n: i64,
    pub x: VectorSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum QuerySpec {
    Points(Vec<QueryPoint>),
    /// `count` points with ‖x‖ ≤ radius and n uniform in `times`.
    Sample {
        count: usize,
        radius: f64,
        times: [i64; 2],
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderSpec {
    pub alpha: f64,
    pub scales: Vec<f64>,
    pub pairs: usize,
    #[serde(default)]
    pub n: i64,
    pub center: VectorSpec,
    #[serde(default = "one")]
    pub radius: f64,
}

pub fn parse(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_str(text)
}
