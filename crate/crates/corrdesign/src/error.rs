//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong while building problems, solving the
/// measure relaxation, or constructing exact designs.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid design grid: {0}")]
    InvalidGrid(String),

    #[error("basis is rank deficient: numerical rank {rank} < {p} columns")]
    DegenerateBasis { rank: usize, p: usize },

    #[error("covariance matrix is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    #[error("matrix is not symmetric")]
    InvalidMatrix,

    #[error("smallest eigenvalue must be positive and finite, got {0:e}")]
    InvalidEigenvalue(f64),

    #[error("kappa = {kappa:e} violates 0 < kappa < lambda_min(C) = {lambda_min:e}")]
    InvalidKappa { kappa: f64, lambda_min: f64 },

    #[error("design size n = {n} must satisfy p = {p} <= n <= N = {n_points}")]
    InvalidDesignSize { n: usize, p: usize, n_points: usize },

    #[error("epsilon = {epsilon:e} must satisfy 0 < epsilon <= 1/N = {max:e}")]
    InvalidEpsilon { epsilon: f64, max: f64 },

    #[error("invalid design measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid exact design: {0}")]
    InvalidDesign(String),

    #[error("virtual noise is infinite at grid index {index} (zero weight); use the restricted-support path")]
    InfiniteNoise { index: usize },

    #[error("Taylor cut anchor must have every weight >= epsilon; weight {weight:e} at index {index}")]
    InvalidAnchor { index: usize, weight: f64 },

    #[error("information matrix is singular or indefinite")]
    SingularInformation,

    #[error("linear program is infeasible: {0}")]
    InfeasibleLP(String),

    #[error("covariance submatrix for design {context} is not numerically positive definite")]
    IllConditionedCovariance { context: String },

    #[error("conditional variance at candidate {index} is numerically zero; augmentation would be singular")]
    NearSingularAugmentation { index: usize },

    #[error("exchange step produced a singular information matrix after dropping index {index}")]
    BksfSingularStep { index: usize },

    #[error("quantile extraction could not resolve {n} distinct indices")]
    ExtractionCollision { n: usize },

    #[error("measure support has {support} points, fewer than the design size {n}")]
    InsufficientSupport { support: usize, n: usize },

    #[error("exhaustive search over {combinations} combinations exceeds the cap {cap}")]
    TooLarge { combinations: u128, cap: u128 },

    #[error("invalid n-sweep range: {0}")]
    InvalidRange(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
