#![forbid(unsafe_code)]
// `!(x > eps)`-style guards are deliberate: unlike the suggested
// `x <= eps`, they are also true for NaN, which is exactly what the
// validation paths must reject. Index loops are kept where they mirror
// the row/column structure of the underlying matrix math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
//! Approximate maximum-likelihood log-concave density estimation.
//!
//! The maximum-likelihood log-concave density for points `X_1..X_n` is a
//! tent density: the exponential of the smallest concave function on the
//! hull of the points majorizing heights `y_i` at the points, normalized
//! by its integral. Fitting reduces to a concave maximization over the
//! height vector, driven by stochastic supergradients obtained by sampling
//! the current tent density.
//!
//! Module map:
//! - [`lp_core`]: dense LP solver plus the tent oracles built on it
//!   (evaluation, polyhedral statistic, membership, separation).
//! - [`tent_model`]: tent parameters, densities, objective assembly, and
//!   the stochastic supergradient.
//! - [`sampler`]: superlevel-set decomposition, uniform sampling and volume
//!   backends, rejection sampling, and the log-partition estimator.
//! - [`optimizer`]: the projected stochastic subgradient loop with iterate
//!   averaging, plus certification of fitted parameters.
//! - [`oracle`]: independent ground truth for verification; exact
//!   one-dimensional integration, brute-force maximum likelihood on tiny
//!   instances, finite-difference gradients, and a Hellinger harness.

pub mod error;
pub mod lp_core;
pub mod optimizer;
pub mod oracle;
pub mod sampler;
pub mod tent_model;

pub use error::{Error, Result};
pub use lp_core::{
    membership_oracle, polyhedral_statistic, separation_oracle, solve_lp, tent_evaluate,
    Constraint, ConstraintOp, Hyperplane, LpProblem, LpSolution, LpStatus, PolyhedralStatistic,
    SampleSet, Separation, Sense, Side, TentValue, FEAS_TOL,
};
pub use sampler::{
    build_decomposition, build_decomposition_relaxed, estimate_log_partition, estimate_volume,
    sample_tent, uniform_sample, ConvexBody, LevelSetDecomposition, MembershipBody, Proposal,
    SampleStats, SamplerConfig, TentLevelSet, VolumeBackend, VolumeEstimate,
};
pub use optimizer::{
    certify, diameter_bound, fit, project_feasible, step_constant, Diagnostics, FitFailure,
    FitReport, SolverConfig, TracePoint,
};
pub use tent_model::{
    objective_value, stochastic_subgradient, tent_density_value, LogPartitionEstimate,
    ObjectiveValue, TentDensity, TentParams,
};
