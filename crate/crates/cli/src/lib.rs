//! Batch experiment runner: reads a JSON config, builds the system, runs the
//! verification, conjugacy and Hölder pipelines and writes machine-readable
//! reports.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod error;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dicholin::{
    alpha_max, audit_constants, check_full_orbit_bounded, empirical_holder, holder_smallness, smallness_check,
    ConjugacyProblem, Example, HolderBudget, HolderSampling, NormKind, OrbitCheck, PerturbationSequence, Sampler,
    Space, Tolerances, Vector,
};

use build::Built;
use config::{ExperimentConfig, QuerySpec, SystemSpec};
pub use error::CliError;
use report::*;

/// Allowed slack of the Picard sup-change ratio over q.
pub const PICARD_SLACK: f64 = 0.05;
/// Allowed shortfall of the empirical Hölder slope below α.
pub const SLOPE_SLACK: f64 = 0.05;
const AUDIT_SAMPLES: usize = 400;
const DEFAULT_QUERIES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Verify,
    Solve,
    Holder,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Holder => "holder",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dicholin",
    version,
    about = "Dichotomy certificates and conjugacy experiments"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Everything a run produced; the exit code is 0 iff `report.passed`.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub timing: Timing,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            2
        }
    }
}

/// DICHOLIN_THREADS caps the pool size; 0 or unset means one thread per core.
fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let n = match std::env::var("DICHOLIN_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("DICHOLIN_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    config::parse(&text).map_err(|e| CliError::Config(e.to_string()))
}

/// Runs `command` and writes report.json, timing.json and the CSV files to `out`.
pub fn run(command: Command, config_path: &Path, out: &Path, seed: Option<u64>) -> Result<Outcome, CliError> {
    let cfg = load_config(config_path)?;
    let outcome = execute(command, &cfg, seed)?;
    write_outputs(&outcome, out)?;
    Ok(outcome)
}

fn generator_name(s: &SystemSpec) -> &'static str {
    match s {
        SystemSpec::DimensionExchange => "dimension_exchange",
        SystemSpec::Scalar { .. } => "scalar",
        SystemSpec::WeightedShift { .. } => "weighted_shift",
        SystemSpec::FamilySwitch { .. } => "family_switch",
        SystemSpec::Explicit { .. } => "explicit",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn max_opt(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Runs the pipelines without touching the filesystem.
pub fn execute(command: Command, cfg: &ExperimentConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let total = Instant::now();
    let seed = seed.unwrap_or(cfg.seed);
    let pool = thread_pool()?;
    let mut timing = Timing {
        threads: pool.current_num_threads(),
        ..Timing::default()
    };
    let mut report = Report {
        command: command.name().into(),
        seed,
        ..Report::default()
    };
    let wants_solve = matches!(command, Command::Solve | Command::All);
    let wants_holder = command == Command::Holder || (command == Command::All && cfg.holder.is_some());
    if command == Command::Holder && cfg.holder.is_none() {
        return Err(CliError::Config("the holder command needs a \"holder\" block".into()));
    }

    let t = Instant::now();
    let p = build::norm(cfg.norm)?;
    let ex = match build::system(cfg)? {
        Built::Ready(ex) => ex,
        Built::Rejected(msg) => {
            report.failures.push(format!("certificate: {msg}"));
            timing.total_s = total.elapsed().as_secs_f64();
            return Ok(Outcome { report, timing });
        }
    };
    let space = ex.cert.seq.space();
    let pert = build::perturbation(cfg.perturbation.as_ref(), space, p)?;
    let ready = verify_phase(cfg, &ex, &pert, seed, &mut report)?;
    timing.verify_s = t.elapsed().as_secs_f64();

    if ready && (wants_solve || wants_holder) {
        let tol = Tolerances {
            tail_tol: cfg.tolerances.tail_tol,
            iter_tol: cfg.tolerances.iter_tol,
            inv_tol: cfg.tolerances.inv_tol,
        };
        let prob = ConjugacyProblem::new(ex.cert.clone(), pert, tol).map_err(|e| CliError::Config(e.to_string()))?;
        if wants_solve {
            let t = Instant::now();
            solve_phase(cfg, &prob, seed, &pool, &mut report)?;
            timing.solve_s = t.elapsed().as_secs_f64();
        }
        if wants_holder {
            let t = Instant::now();
            holder_phase(cfg, &prob, seed, &mut report)?;
            timing.holder_s = t.elapsed().as_secs_f64();
        }
    }
    report.passed = report.failures.is_empty();
    timing.total_s = total.elapsed().as_secs_f64();
    Ok(Outcome { report, timing })
}

/// Certificate summary, witness, constant audit and smallness. Returns whether
/// the conjugacy pipelines may run.
fn verify_phase(
    cfg: &ExperimentConfig,
    ex: &Example<f64>,
    pert: &PerturbationSequence<f64>,
    seed: u64,
    report: &mut Report,
) -> Result<bool, CliError> {
    let cert = &ex.cert;
    let p = cert.norm;
    let rho = cert
        .seq
        .global_growth_bound(p)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let r = &cert.report;
    let checks = [
        ("splitting", &r.splitting),
        ("nesting", &r.nesting),
        ("stable_decay", &r.stable_decay),
        ("unstable_decay", &r.unstable_decay),
        ("projection_bound", &r.projection_bound),
    ]
    .into_iter()
    .map(|(name, c)| CheckSummary {
        name,
        passed: c.passed,
        margin: c.margin,
    })
    .collect();
    report.certificate = Some(CertificateSummary {
        generator: generator_name(&cfg.system).into(),
        space: match cert.seq.space() {
            Space::Dense(d) => format!("dense({d})"),
            Space::Sparse => "sparse".into(),
        },
        norm: p.to_string(),
        window: [cert.window.start, cert.window.end],
        d: cert.d,
        lambda: cert.lambda,
        nominal_lambda: ex.nominal_lambda,
        rho,
        alpha0: finite(alpha_max(cert.lambda, rho)),
        max_projection_norm: r.max_projection_norm,
        verified: cert.is_verified(),
        checks,
    });
    if !cert.is_verified() {
        report
            .failures
            .push(format!("certificate: failed checks {}", r.failures().join(", ")));
        return Ok(false);
    }

    if let Some(x0) = &ex.witness {
        let bound = (1.0 + 1e-12) * x0.norm(p);
        report.witness = Some(match check_full_orbit_bounded(&cert.seq, x0, cert.window, bound, p) {
            Ok(OrbitCheck::Bounded { max_norm, .. }) => WitnessSummary {
                outcome: "bounded".into(),
                max_norm: Some(max_norm),
            },
            Ok(OrbitCheck::NoDecay { max_norm }) => WitnessSummary {
                outcome: "no_decay".into(),
                max_norm: Some(max_norm),
            },
            Ok(OrbitCheck::Unbounded { first_exit }) => WitnessSummary {
                outcome: format!("unbounded at {first_exit}"),
                max_norm: None,
            },
            Err(e) => WitnessSummary {
                outcome: format!("not checked: {e}"),
                max_norm: None,
            },
        });
    }

    let (c_emp, m_emp, c_flagged, m_flagged) = if pert.is_zero() {
        (0.0, 0.0, false, false)
    } else {
        let sampler = Sampler {
            count: AUDIT_SAMPLES,
            radius: 2.0,
            times: (cert.window.start, cert.window.end),
            seed,
        };
        let a = audit_constants(pert, cert.seq.space(), &sampler, p).map_err(|e| CliError::Config(e.to_string()))?;
        (a.c_emp, a.m_emp, a.c_flagged, a.m_flagged)
    };
    report.perturbation = Some(PerturbationSummary {
        c: pert.lipschitz(),
        m: pert.bound(),
        c_emp,
        m_emp,
        c_flagged,
        m_flagged,
    });
    if c_flagged {
        report.failures.push(format!(
            "perturbation: sampled Lipschitz quotient {c_emp} exceeds the declared c = {}",
            pert.lipschitz()
        ));
    }
    if m_flagged {
        report.failures.push(format!(
            "perturbation: sampled sup {m_emp} exceeds the declared M = {}",
            pert.bound()
        ));
    }

    let s = smallness_check(pert.lipschitz(), cert.d, cert.lambda);
    report.smallness = Some(SmallnessSummary {
        q: s.q,
        c_star: s.c_star,
        passed: s.passed,
    });
    if !s.passed {
        report.failures.push(format!(
            "smallness: q = {} >= 1; reduce c below the threshold c* = {}",
            s.q, s.c_star
        ));
    }
    Ok(s.passed && !c_flagged && !m_flagged)
}

fn random_point(rng: &mut ChaCha8Rng, space: Space, radius: f64, p: NormKind) -> Vector<f64> {
    loop {
        let v = match space {
            Space::Dense(d) => Vector::dense((0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()),
            Space::Sparse => Vector::sparse((-4..=4).map(|i| (i, rng.gen_range(-1.0..=1.0))).collect::<Vec<_>>()),
        };
        let n = v.norm(p);
        if n > 1e-3 {
            let r = rng.gen_range(0.0..=radius);
            return v.scale(r / n);
        }
    }
}

fn queries(cfg: &ExperimentConfig, space: Space, p: NormKind, seed: u64) -> Result<Vec<(i64, Vector<f64>)>, CliError> {
    let sample = |count: usize, radius: f64, times: [i64; 2]| -> Result<Vec<(i64, Vector<f64>)>, CliError> {
        if !(radius >= 0.0 && times[0] <= times[1]) {
            return Err(CliError::Config(
                "query sampler needs radius >= 0 and times[0] <= times[1]".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        Ok((0..count)
            .map(|_| {
                let n = rng.gen_range(times[0]..=times[1]);
                (n, random_point(&mut rng, space, radius, p))
            })
            .collect())
    };
    match &cfg.queries {
        None => sample(DEFAULT_QUERIES, 1.0, [-5, 5]),
        Some(QuerySpec::Sample { count, radius, times }) => sample(*count, *radius, *times),
        Some(QuerySpec::Points(points)) => points
            .iter()
            .map(|q| {
                let x = build::vector(&q.x);
                space.check(&x).map_err(|e| CliError::Config(e.to_string()))?;
                Ok((q.n, x))
            })
            .collect(),
    }
}

fn query_row(prob: &ConjugacyProblem<f64>, id: usize, n: i64, x: &Vector<f64>) -> Result<QueryRow, String> {
    let p = prob.cert.norm;
    let h = prob.solve_h(n, x).map_err(|e| e.to_string())?;
    let conj = prob.conjugacy_residual(n, x).map_err(|e| e.to_string())?;
    let inv = prob.inverse_residual(n, x);
    let range = prob.range_check(n, x).map_err(|e| e.to_string())?;
    let h_norm = h.value.norm(p);
    let max_picard_ratio = max_opt(h.sup_changes.windows(2).map(|w| (w[0] > 0.0).then(|| w[1] / w[0])));
    // a distance to a subspace measured in a non-Euclidean norm may amplify
    // the solver error by up to √d
    let range_bound = match (p, prob.sys.seq.space()) {
        (NormKind::L2, _) | (_, Space::Sparse) => h.err_bound,
        (_, Space::Dense(d)) => h.err_bound * (d as f64).sqrt(),
    };
    let mut failures = Vec::new();
    if !conj.within() {
        failures.push(format!("conjugacy residual {} above bound {}", conj.value, conj.bound));
    }
    if h_norm > prob.uniform_bound() + h.err_bound {
        failures.push(format!(
            "‖h‖ = {h_norm} above the uniform bound {}",
            prob.uniform_bound()
        ));
    }
    if let Some(r) = max_picard_ratio {
        if r > prob.q + PICARD_SLACK {
            failures.push(format!("Picard ratio {r} above q + {PICARD_SLACK}"));
        }
    }
    let range_dist = range.value();
    if let Some(d) = range_dist {
        if d > range_bound {
            failures.push(format!("range distance {d} above {range_bound}"));
        }
    }
    let (r1, r2) = match inv {
        Ok(inv) => {
            for (name, r) in [("first", inv.r1), ("second", inv.r2)] {
                if !r.within() {
                    failures.push(format!("{name} inverse residual {} above bound {}", r.value, r.bound));
                }
            }
            (Some(inv.r1), Some(inv.r2))
        }
        Err(e) => {
            failures.push(format!("inverse residuals unavailable: {e}"));
            (None, None)
        }
    };
    Ok(QueryRow {
        n,
        x_id: id,
        h_norm,
        err_bound: h.err_bound,
        iterations: h.iterations,
        max_picard_ratio,
        conj_residual: conj.value,
        conj_bound: conj.bound,
        inv_residual_1: r1.map(|r| r.value),
        inv_bound_1: r1.map(|r| r.bound),
        inv_residual_2: r2.map(|r| r.value),
        inv_bound_2: r2.map(|r| r.bound),
        range_dist,
        range_bound,
        failures,
    })
}

fn solve_phase(
    cfg: &ExperimentConfig,
    prob: &ConjugacyProblem<f64>,
    seed: u64,
    pool: &rayon::ThreadPool,
    report: &mut Report,
) -> Result<(), CliError> {
    let qs = queries(cfg, prob.sys.seq.space(), prob.cert.norm, seed)?;
    let results: Vec<Result<QueryRow, String>> = pool.install(|| {
        qs.par_iter()
            .enumerate()
            .map(|(id, (n, x))| query_row(prob, id, *n, x))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => {
                for f in &row.failures {
                    report.failures.push(format!("query {id} (n = {}): {f}", row.n));
                }
                rows.push(row);
            }
            Err(e) => report.failures.push(format!("query {id} (n = {}): {e}", qs[id].0)),
        }
    }
    rows.sort_by_key(|r| (r.n, r.x_id));
    report.conjugacy = Some(ConjugacySummary {
        depth: prob.depth,
        tail_bound: prob.tail_bound(),
        h_err_bound: prob.h_err_bound(),
        uniform_bound: prob.uniform_bound(),
        picard_limit: prob.q + PICARD_SLACK,
        queries: qs.len(),
        max_conj_residual: rows.iter().map(|r| r.conj_residual).fold(0.0, f64::max),
        max_inv_residual_1: max_opt(rows.iter().map(|r| r.inv_residual_1)),
        max_inv_residual_2: max_opt(rows.iter().map(|r| r.inv_residual_2)),
        max_range_dist: max_opt(rows.iter().map(|r| r.range_dist)),
        max_picard_ratio: max_opt(rows.iter().map(|r| r.max_picard_ratio)),
        rows,
    });
    Ok(())
}

fn holder_phase(
    cfg: &ExperimentConfig,
    prob: &ConjugacyProblem<f64>,
    seed: u64,
    report: &mut Report,
) -> Result<(), CliError> {
    let spec = cfg.holder.as_ref().expect("holder block checked by caller");
    let budget = HolderBudget::from_problem(prob, spec.alpha).map_err(|e| CliError::Config(e.to_string()))?;
    let hr = holder_smallness(&budget);
    let center = build::vector(&spec.center);
    prob.sys
        .seq
        .space()
        .check(&center)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let sampling = HolderSampling {
        pairs_per_scale: spec.pairs,
        radius: spec.radius,
        seed: seed.wrapping_add(2),
    };
    let est = match empirical_holder(prob, spec.n, &center, &spec.scales, &sampling) {
        Ok(est) => est,
        Err(e @ dicholin::Error::Invalid(_)) => return Err(CliError::Config(e.to_string())),
        Err(e) => {
            report.failures.push(format!("holder: {e}"));
            return Ok(());
        }
    };
    let slope_floor = spec.alpha - SLOPE_SLACK;
    let slope_ok = est.slope >= slope_floor;
    if !hr.passed {
        report.failures.push(format!(
            "holder: smallness conditions fail at α = {} (K threshold {})",
            spec.alpha, hr.k_threshold
        ));
    }
    if !slope_ok {
        report
            .failures
            .push(format!("holder: empirical slope {} below {slope_floor}", est.slope));
    }
    report.holder = Some(HolderSummary {
        alpha: spec.alpha,
        alpha0: finite(hr.alpha0),
        conditions: HolderConditions {
            c_in_range: hr.c_in_range,
            backward_ok: hr.backward_ok,
            backward_margin: hr.backward_margin,
            l: hr.l,
            k_threshold: hr.k_threshold,
            k_margin: hr.k_margin,
            k: hr.k,
            passed: hr.passed,
        },
        slope: est.slope,
        slope_floor,
        slope_ok,
        rows: est
            .rows
            .iter()
            .map(|r| HolderRowSummary {
                scale: r.scale,
                max_diff: r.max_diff,
                slope_window: r.slope_window,
            })
            .collect(),
        warnings: est.warnings,
    });
    Ok(())
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })
}

fn json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

pub fn write_outputs(outcome: &Outcome, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let report = &outcome.report;
    write_file(out.join("report.json"), &json(report))?;
    write_file(out.join("timing.json"), &json(&outcome.timing))?;
    if let Some(c) = &report.conjugacy {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &c.rows {
            w.serialize(ResidualCsvRow {
                n: r.n,
                x_id: r.x_id,
                conj_residual: r.conj_residual,
                inv_residual_1: r.inv_residual_1,
                inv_residual_2: r.inv_residual_2,
                range_dist: r.range_dist,
                err_bound: r.err_bound,
            })?;
        }
        write_file(out.join("residuals.csv"), &csv_bytes(w)?)?;
    }
    if let Some(h) = &report.holder {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &h.rows {
            w.serialize(HolderCsvRow {
                scale: r.scale,
                max_diff: r.max_diff,
                slope_window: r.slope_window,
            })?;
        }
        write_file(out.join("holder.csv"), &csv_bytes(w)?)?;
    }
    Ok(())
}

fn csv_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

/// Parses arguments, runs, prints a summary and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command, &cli.config, &cli.out, cli.seed) {
        Ok(outcome) => {
            let r = &outcome.report;
            if r.passed {
                println!("PASSED: {} ({})", r.command, cli.out.join("report.json").display());
            } else {
                for f in &r.failures {
                    eprintln!("{f}");
                }
                println!("FAILED: {} ({} failures)", r.command, r.failures.len());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
