//! Turns a parsed config into certified systems and perturbations.

use dicholin::{
    analytic_constants, make_dimension_exchange, make_family_switch, make_scalar, make_weighted_shift,
    DichotomyCertificate, Example, FamilySpec, IndexMap, IndexSet, Matrix, Modulation, NormKind, Operator,
    OperatorSequence, PerturbationSequence, Probes, ProjectionFamily, Projector, ScalarExpr, ShiftSpec, Space, Term,
    Vector, WeightRule, Window,
};

use crate::config::{
    ExperimentConfig, ExprSpec, OperatorSpec, PerturbationSpec, ProjectorSpec, SystemSpec, VectorSpec, WeightSpec,
};
use crate::error::CliError;

/// Outcome of building the linear system.
pub enum Built {
    Ready(Box<Example<f64>>),
    /// The generator or the explicit certificate did not verify.
    Rejected(String),
}

pub fn norm(p: u32) -> Result<NormKind, CliError> {
    match p {
        0 => Ok(NormKind::Inf),
        p => NormKind::from_p(p).ok_or_else(|| CliError::Config(format!("norm must be 1, 2 or 0 (sup), got {p}"))),
    }
}

pub fn window(w: [i64; 2]) -> Result<Window, CliError> {
    Window::new(w[0], w[1]).map_err(config)
}

fn config(e: dicholin::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn weights(w: &WeightSpec) -> WeightRule<f64> {
    match w {
        WeightSpec::Constant { value } => WeightRule::Constant(*value),
        WeightSpec::Step {
            crossing,
            at_or_below,
            above,
        } => WeightRule::Step {
            crossing: *crossing,
            at_or_below: *at_or_below,
            above: *above,
        },
        WeightSpec::Windowed {
            start,
            values,
            before,
            after,
        } => WeightRule::Windowed {
            start: *start,
            values: values.clone(),
            before: *before,
            after: *after,
        },
    }
}

fn operator(spec: &OperatorSpec) -> Result<(Operator<f64>, Space), CliError> {
    match spec {
        OperatorSpec::Matrix(rows) => Ok((Operator::from_rows(rows).map_err(config)?, Space::Dense(rows.len()))),
        OperatorSpec::Shift { shift } => Ok((Operator::weighted_shift(weights(shift)).map_err(config)?, Space::Sparse)),
    }
}

pub fn vector(spec: &VectorSpec) -> Vector<f64> {
    match spec {
        VectorSpec::Dense(v) => Vector::dense(v.clone()),
        VectorSpec::Sparse { sparse } => Vector::sparse(sparse.iter().copied()),
    }
}

/// Generator failures that mean "did not verify" are check failures; the rest
/// are configuration errors.
fn finish(r: dicholin::Result<Example<f64>>) -> Result<Built, CliError> {
    match r {
        Ok(ex) => Ok(Built::Ready(Box::new(ex))),
        Err(e @ dicholin::Error::NotVerified(_)) => Ok(Built::Rejected(e.to_string())),
        Err(e) => Err(config(e)),
    }
}

pub fn system(cfg: &ExperimentConfig) -> Result<Built, CliError> {
    let p = norm(cfg.norm)?;
    let w = window(cfg.window)?;
    match &cfg.system {
        SystemSpec::DimensionExchange => finish(make_dimension_exchange(w, p)),
        SystemSpec::Scalar { a } => finish(make_scalar(*a, w)),
        SystemSpec::WeightedShift {
            weights: ws,
            stable_bound,
            unstable_bound,
            crossing,
        } => finish(make_weighted_shift(&ShiftSpec {
            weights: weights(ws),
            stable_bound: *stable_bound,
            unstable_bound: *unstable_bound,
            crossing: *crossing,
            norm: p,
            window: w,
        })),
        SystemSpec::FamilySwitch {
            letters,
            lambdas,
            projector,
            connector,
            pattern,
            phase,
        } => {
            let mut ops = Vec::with_capacity(letters.len());
            let mut space = None;
            for l in letters.iter().chain(connector) {
                let (op, s) = operator(l)?;
                if space.is_some_and(|t| t != s) {
                    return Err(CliError::Config("family letters act on different spaces".into()));
                }
                space = Some(s);
                ops.push(op);
            }
            let space = space.ok_or_else(|| CliError::Config("family needs at least one letter".into()))?;
            let connector = connector.as_ref().map(|_| ops.pop().expect("connector pushed last"));
            let projector = match projector {
                ProjectorSpec::Mask(m) => Projector::diag(m),
                ProjectorSpec::AtMost { at_most } => Projector::coordinates(IndexSet::at_most(*at_most)),
            };
            finish(make_family_switch(&FamilySpec {
                letters: ops,
                lambdas: lambdas.clone(),
                projector,
                connector,
                itinerary: IndexMap::Periodic {
                    pattern: pattern.clone(),
                    phase: *phase,
                },
                space,
                norm: p,
                window: w,
            }))
        }
        SystemSpec::Explicit {
            start,
            matrices,
            projections,
            d,
            lambda,
        } => {
            let dim = matrices
                .first()
                .map(|m| m.len())
                .ok_or_else(|| CliError::Config("explicit system needs at least one matrix".into()))?;
            let ops = matrices
                .iter()
                .map(|m| Operator::from_rows(m))
                .collect::<dicholin::Result<Vec<_>>>()
                .map_err(config)?;
            let projs = projections
                .iter()
                .map(|m| Matrix::from_rows(m).and_then(Projector::dense))
                .collect::<dicholin::Result<Vec<_>>>()
                .map_err(config)?;
            let seq = OperatorSequence::windowed(*start, ops, Space::Dense(dim)).map_err(config)?;
            let proj = ProjectionFamily::windowed(*start, projs).map_err(config)?;
            proj.check_space(Space::Dense(dim)).map_err(config)?;
            let cert =
                DichotomyCertificate::verify(seq, proj, w, *d, *lambda, p, &Probes::default()).map_err(config)?;
            Ok(Built::Ready(Box::new(Example {
                cert,
                witness: None,
                nominal_lambda: *lambda,
            })))
        }
    }
}

fn expr(e: &ExprSpec) -> ScalarExpr<f64> {
    match e {
        ExprSpec::Const { value } => ScalarExpr::Const(*value),
        ExprSpec::Sin { coord, freq, phase } => ScalarExpr::Sin {
            coord: *coord,
            freq: *freq,
            phase: *phase,
        },
        ExprSpec::Clamp { coord, lo, hi } => ScalarExpr::Clamp {
            coord: *coord,
            lo: *lo,
            hi: *hi,
        },
        ExprSpec::Scaled { factor, expr: inner } => ScalarExpr::Scaled(*factor, Box::new(expr(inner))),
        ExprSpec::Sum { terms } => ScalarExpr::Sum(terms.iter().map(expr).collect()),
    }
}

/// Missing declared constants default to the values implied by the terms.
pub fn perturbation(
    spec: Option<&PerturbationSpec>,
    space: Space,
    p: NormKind,
) -> Result<PerturbationSequence<f64>, CliError> {
    let Some(spec) = spec else {
        return Ok(PerturbationSequence::zero());
    };
    let terms: Vec<Term<f64>> = spec
        .terms
        .iter()
        .map(|t| Term {
            direction: vector(&t.direction),
            profile: expr(&t.profile),
        })
        .collect();
    let modulation = match &spec.factors {
        None => Modulation::Constant,
        Some(f) => Modulation::Periodic {
            phase: spec.phase,
            factors: f.clone(),
        },
    };
    let (c0, m0) = analytic_constants(&terms, p);
    let seq =
        PerturbationSequence::new(terms, modulation, spec.c.unwrap_or(c0), spec.m.unwrap_or(m0)).map_err(config)?;
    seq.check_space(space).map_err(config)?;
    Ok(seq)
}
