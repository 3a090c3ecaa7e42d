//! Generalized exponential dichotomies for two-sided operator sequences and
//! the linearization (topological conjugacy) of their small Lipschitz
//! perturbations.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases fix
//! the scalar to `f64`.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod conjugacy;
pub mod dichotomy;
pub mod error;
pub mod examples;
pub mod holder;
pub mod linops;
pub mod perturbation;
pub mod scalar;

pub use cocycle::{transition, IndexMap, OperatorSequence, SequenceRule, Window};
pub use conjugacy::{
    smallness_check, truncation_window, ConjugacyProblem, HSolution, HbarSolution, InverseResiduals, OrbitTable,
    Residual, Smallness, Tolerances,
};
pub use dichotomy::{
    bounded_solution, check_full_orbit_bounded, fit_constants, green_sum, range_distance, tail_depth, verify_dichotomy,
    BoundedSolution, CheckOutcome, DichotomyCertificate, OrbitCheck, Probes, ProjectionFamily, Projector,
    RangeDistance, VerificationReport, Witness,
};
pub use error::{Error, Result};
pub use examples::{
    make_dimension_exchange, make_family_switch, make_nonuniqueness_witness, make_scalar, make_weighted_shift, Example,
    FamilySpec, NonuniquenessWitness, ShiftSpec,
};
pub use holder::{
    alpha_max, backward_lipschitz, empirical_holder, forward_lipschitz, holder_smallness, HolderBudget, HolderEstimate,
    HolderReport, HolderRow, HolderSampling,
};
pub use linops::{operator_norm, IndexSet, Lu, Matrix, NormKind, Operator, Space, Vector, WeightRule};
pub use perturbation::{
    analytic_constants, audit_constants, ConstantAudit, Modulation, NonlinearSystem, PerturbationSequence, Sampler,
    ScalarExpr, Term,
};
pub use scalar::Real;

pub type Vector64 = Vector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Operator64 = Operator<f64>;
pub type OperatorSequence64 = OperatorSequence<f64>;
pub type Projector64 = Projector<f64>;
pub type ProjectionFamily64 = ProjectionFamily<f64>;
pub type Certificate64 = DichotomyCertificate<f64>;
pub type PerturbationSequence64 = PerturbationSequence<f64>;
pub type ConjugacyProblem64 = ConjugacyProblem<f64>;
