//! Error taxonomy shared by every module in the crate.

use thiserror::Error;

/// Failures surfaced by the estimation pipeline.
///
/// Variants are grouped by origin: construction-time validation
/// (`DegenerateSampleSet`, `InvalidParams`), linear-programming failures
/// (`NumericalFailure`, `OutsideHull`), sampling failures (`WalkStuck`,
/// `RetryExhausted`, `VolumeFailure`), and verification-oracle failures
/// (`DegenerateSupport`, `ToleranceNotMet`, `NeighborhoodCrossing`).
#[derive(Debug, Error)]
pub enum Error {
    /// A query point lies outside the convex hull of the sample points, in a
    /// context where the caller promised it would not.
    #[error("query point lies outside the convex hull of the samples")]
    OutsideHull,

    /// The LP solver could not drive residuals below the feasibility
    /// tolerance, or produced an internally inconsistent solution.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The sample points do not affinely span the ambient space, so the
    /// hull is lower-dimensional and no density on R^d exists.
    #[error("degenerate samples: affine rank {rank}, need {required} for dimension {dim}")]
    DegenerateSampleSet {
        rank: usize,
        required: usize,
        dim: usize,
    },

    /// A superlevel-set query used a level above the global density maximum.
    #[error("level {level:e} exceeds the maximum density value {max:e}")]
    DegenerateLevel { level: f64, max: f64 },

    /// A volume backend could not certify the requested relative error.
    #[error("volume estimate not certified: {0}")]
    VolumeFailure(String),

    /// The random walk failed to move for a full sweep of directions.
    #[error("random walk made no progress for a full sweep of directions")]
    WalkStuck,

    /// Rejection sampling hit its round cap without accepting.
    #[error("rejection sampling exhausted {0} rounds without accepting")]
    RetryExhausted(usize),

    /// Tent parameters violate their construction invariants.
    #[error("invalid tent parameters: {0}")]
    InvalidParams(String),

    /// An objective evaluation produced a non-finite value, signalling an
    /// inconsistency between the LP layer and the sampler.
    #[error("objective not finite: {0}")]
    NonFiniteObjective(String),

    /// A one-dimensional oracle was given samples with zero spread.
    #[error("degenerate support: {0}")]
    DegenerateSupport(String),

    /// Adaptive quadrature exhausted its budget before certifying the
    /// requested tolerance.
    #[error("quadrature tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    /// A finite-difference step changed the set of active envelope knots,
    /// so the central difference does not approximate a one-sided gradient.
    #[error("finite-difference step crosses an envelope vertex change at coordinate {0}")]
    NeighborhoodCrossing(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
