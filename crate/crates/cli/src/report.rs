//! Serializable run report. Field order is fixed by the struct definitions, so
//! identical inputs give identical bytes.

use serde::Serialize;

#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub failures: Vec<String>,
    pub certificate: Option<CertificateSummary>,
    pub witness: Option<WitnessSummary>,
    pub perturbation: Option<PerturbationSummary>,
    pub smallness: Option<SmallnessSummary>,
    pub conjugacy: Option<ConjugacySummary>,
    pub holder: Option<HolderSummary>,
}

#[derive(Debug, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Serialize)]
pub struct CertificateSummary {
    pub generator: String,
    pub space: String,
    pub norm: String,
    pub window: [i64; 2],
    pub d: f64,
    pub lambda: f64,
    pub nominal_lambda: f64,
    pub rho: f64,
    /// λ/ρ; absent when ρ = 0.
    pub alpha0: Option<f64>,
    pub max_projection_norm: f64,
    pub verified: bool,
    pub checks: Vec<CheckSummary>,
}

#[derive(Debug, Serialize)]
pub struct WitnessSummary {
    pub outcome: String,
    pub max_norm: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PerturbationSummary {
    pub c: f64,
    pub m: f64,
    pub c_emp: f64,
    pub m_emp: f64,
    pub c_flagged: bool,
    pub m_flagged: bool,
}

#[derive(Debug, Serialize)]
pub struct SmallnessSummary {
    pub q: f64,
    pub c_star: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryRow {
    pub n: i64,
    pub x_id: usize,
    pub h_norm: f64,
    pub err_bound: f64,
    pub iterations: usize,
    pub max_picard_ratio: Option<f64>,
    pub conj_residual: f64,
    pub conj_bound: f64,
    pub inv_residual_1: Option<f64>,
    pub inv_bound_1: Option<f64>,
    pub inv_residual_2: Option<f64>,
    pub inv_bound_2: Option<f64>,
    pub range_dist: Option<f64>,
    pub range_bound: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ConjugacySummary {
    pub depth: usize,
    pub tail_bound: f64,
    pub h_err_bound: f64,
    pub uniform_bound: f64,
    pub picard_limit: f64,
    pub queries: usize,
    pub max_conj_residual: f64,
    pub max_inv_residual_1: Option<f64>,
    pub max_inv_residual_2: Option<f64>,
    pub max_range_dist: Option<f64>,
    pub max_picard_ratio: Option<f64>,
    pub rows: Vec<QueryRow>,
}

#[derive(Debug, Serialize)]
pub struct HolderConditions {
    pub c_in_range: bool,
    pub backward_ok: bool,
    pub backward_margin: f64,
    pub l: Option<f64>,
    pub k_threshold: f64,
    pub k_margin: f64,
    pub k: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct HolderRowSummary {
    pub scale: f64,
    pub max_diff: f64,
    pub slope_window: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct HolderSummary {
    pub alpha: f64,
    pub alpha0: Option<f64>,
    pub conditions: HolderConditions,
    pub slope: f64,
    pub slope_floor: f64,
    pub slope_ok: bool,
    pub rows: Vec<HolderRowSummary>,
    pub warnings: Vec<String>,
}

/// Wall-clock seconds per phase; kept out of the report to preserve determinism.
#[derive(Debug, Default, Serialize)]
pub struct Timing {
    pub threads: usize,
    pub verify_s: f64,
    pub solve_s: f64,
    pub holder_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Serialize)]
pub struct ResidualCsvRow {
    pub n: i64,
    pub x_id: usize,
    pub conj_residual: f64,
    pub inv_residual_1: Option<f64>,
    pub inv_residual_2: Option<f64>,
    pub range_dist: Option<f64>,
    pub err_bound: f64,
}

#[derive(Debug, Serialize)]
pub struct HolderCsvRow {
    pub scale: f64,
    pub max_diff: f64,
    pub slope_window: Option<f64>,
}
