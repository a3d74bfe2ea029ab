//! # ialpha
//!
//! The α-relative entropy family on probability measures with a common
//! dominating measure, realized as densities over a finite weighted support.
//!
//! ```text
//! I_α(P,Q) = (1/ρ) log[ sgn(ρ) · I_f(P',Q') ],   ρ = (1-α)/α,   f(x) = sgn(ρ) x^{1+ρ}
//! ```
//!
//! where `P'`, `Q'` are the escort ("tilted") measures with densities
//! `p^α / ∫p^α dμ`. As α → 1 the family recovers the Kullback-Leibler
//! divergence.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`measures`] | weighted spaces, densities, α-norms, tilting, Rényi/Shannon entropy, KL |
//! | [`divergences`] | `I_f`, `I_α` (two evaluation routes), limit and continuity probes |
//! | [`geometry`] | normalized combinations, parallelogram inequality, Pythagorean reports, segment derivative |
//! | [`projection`] | constraint sets, the projection solver, brute-force oracle, certificates |
//! | [`maxent`] | generalized-Gaussian Rényi-entropy maximizers on grids |
//! | [`campaign`] | seeded randomized verification suites and their reports |
//! | [`io`] | distribution, constraint and report file formats |
//!
//! All logarithms are natural.

use thiserror::Error;

pub mod campaign;
pub mod divergences;
pub mod geometry;
pub mod io;
pub mod maxent;
pub mod measures;
pub mod numeric;
pub mod projection;
pub mod sampling;

pub use divergences::{
    alpha_relative_entropy, alpha_relative_entropy_direct, f_divergence, DivergencePath, DivergenceValue,
};
pub use measures::{AlphaParam, Density, Point, WeightedSpace};
pub use projection::{ConstraintSet, LinearConstraint, ProjectionResult, SolverOptions};

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("negative value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("all values are zero")]
    AllZero,

    #[error("density mass {mass} is not 1 (tolerance {tolerance})")]
    NotNormalized { mass: f64, tolerance: f64 },

    #[error("weighted space must contain at least one point")]
    EmptySpace,

    #[error("mu weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("duplicate point label at index {index}")]
    DuplicateLabel { index: usize },

    #[error("densities live on different spaces")]
    SpaceMismatch,

    #[error("invalid order alpha = {alpha}: {reason}")]
    InvalidAlpha { alpha: f64, reason: &'static str },

    #[error("operation requires the counting measure (all mu weights equal to 1)")]
    NonCountingMeasure,

    #[error("support of p is not contained in the support of q")]
    SupportMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perturbation size {delta} is not below the smallest density value {min_value}")]
    DeltaTooLarge { delta: f64, min_value: f64 },

    #[error("a bracketed f-divergence term is infinite")]
    InfiniteTerm,

    #[error("a segment integral is infinite")]
    InfiniteIntegral,

    #[error("constraint set is infeasible")]
    Infeasible,

    #[error("every feasible density has infinite divergence from the reference")]
    AllDivergencesInfinite,

    #[error("brute-force oracle supports at most {max} free points, got {got}")]
    SupportTooLarge { max: usize, got: usize },

    #[error("inner constraint set is not nested in the outer one")]
    NotNested,

    #[error("alpha = {alpha} is out of range for dimension {n} (need alpha > n/(n+2))")]
    AlphaOutOfRange { alpha: f64, n: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("second moments did not stabilize under grid extension (relative change {change})")]
    MomentDiverged { change: f64 },

    #[error("covariance of g deviates from C by {deviation} (relative)")]
    CovarianceMismatch { deviation: f64 },

    #[error("divergence between the densities is infinite")]
    InfiniteDivergence,

    #[error("points of the weighted space carry no real coordinates")]
    CoordinatesRequired,

    #[error("covariance matrix is not symmetric positive definite")]
    InvalidCovariance,

    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
