//! Optimal experimental design for linear regression with correlated errors
//! on a finite candidate grid.
//!
//! The library solves the convex virtual-noise relaxation of the exact
//! design problem with a cutting-plane method, certifies the result through
//! an equivalence theorem that yields a universal upper bound on every
//! n-point design, and constructs exact designs by greedy exchange,
//! quantile extraction, weighted random sampling, and exhaustive search.

pub mod criteria;
pub mod error;
pub mod examples;
pub mod exactmethods;
pub mod cutplane;
pub mod equivalence;
pub mod measure;
pub mod problem;
pub mod simplex;
pub mod vncore;

pub use criteria::{efficiency, info_matrix_exact, phi_exact, Criterion, ExactDesign};
pub use error::{Error, Result};
pub use examples::{
    build_example, example_spec, reference_table, spatial_cloud, BuiltExample, ExampleId,
    ExampleSpec, ReferenceEntry,
    ReferenceKind, DEFAULT_SAMPLING_SEED,
};
pub use measure::DesignMeasure;
pub use problem::{
    default_kappa, materialize_basis, materialize_covariance, min_eigenvalue, AxisSpec,
    BasisSpec, DesignGrid, GridSpec, KappaChoice, KernelSpec, ProblemInstance,
};
pub use cutplane::{
    optimize_measure, optimize_measure_traced, solve_lp, GapRule, IterationRow, LPProblem,
    SolveOptions, SolveReport, StopReason,
};
pub use equivalence::{calibrate, certify, CalibratedDesign, HEntry, OptimalityCertificate};
pub use exactmethods::{
    bksf, combination_count, default_exchange_start, equispaced_design, exhaustive, greedy_design,
    kriging_residuals,
    quantile_extract, quantile_method, random_extract, random_uniform_baseline, sensitivity_tilde,
    KrigingResiduals, MethodResult, MethodTag, QuantileMode, SampleStats,
};
pub use simplex::{IncrementalLp, LpProblem, LpRow, LpSolution, RowKind};
pub use vncore::{
    equivalence_context, info_matrix_measure, info_matrix_via_noise, taylor_cut,
    virtual_noise_diagonal, EquivalenceContext, TaylorCut,
};
