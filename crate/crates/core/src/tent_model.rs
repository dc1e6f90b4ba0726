//! Tent parameters, tent densities, the fitting objective, and its
//! stochastic supergradient.
//!
//! A height vector `y` (one entry per sample point, normalized to sum to
//! zero) determines the tent function `h`: the smallest concave function
//! on the hull with `h(X_i) >= y_i`. The associated tent density is
//! `exp(h(x) - A(y))` on the hull, where `A(y) = ln integral exp(h)` is
//! the log normalizing constant. Maximizing the average height minus
//! `A(y)` over the zero-sum ball recovers the maximum-likelihood
//! log-concave density; its supergradient at `y` is the uniform vector
//! `1/n` minus the expected hull-combination weights of a draw from the
//! current tent density, which a single draw estimates unbiasedly.

use crate::error::{Error, Result};
use crate::lp_core::{polyhedral_statistic, tent_evaluate, SampleSet, TentValue};
use crate::sampler::{estimate_log_partition, SamplerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tolerance on the zero-sum constraint for tent heights.
pub const SUM_TOL: f64 = 1e-9;

/// A validated tent height vector: finite entries summing to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TentParams(Vec<f64>);

impl TentParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("empty tent height vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("tent heights must be finite".into()));
        }
        let sum: f64 = values.iter().sum();
        if sum.abs() > SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "tent heights must sum to zero, got {sum:.3e}"
            )));
        }
        Ok(TentParams(values))
    }

    /// Removes the mean (twice, to kill the rounding residue of the first
    /// pass) and wraps the result.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("empty tent height vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("tent heights must be finite".into()));
        }
        for _ in 0..2 {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            for v in &mut values {
                *v -= mean;
            }
        }
        TentParams::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TentParams {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TentParams::new(values)
    }
}

impl From<TentParams> for Vec<f64> {
    fn from(p: TentParams) -> Vec<f64> {
        p.0
    }
}

/// A log-partition value together with the accuracy request it answered.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogPartitionEstimate {
    /// Estimate of `ln integral exp(h)`.
    pub value: f64,
    /// Relative error bound on the constant (not its log).
    pub rel_err: f64,
    /// Accuracy the estimate was computed at.
    pub delta: f64,
    /// Failure probability it was computed at.
    pub tau: f64,
    /// Seed of the stream that produced it.
    pub seed: u64,
}

/// A tent density: sample points, heights, and a lazily computed (and
/// cached) log normalizing constant.
#[derive(Debug, Clone)]
pub struct TentDensity {
    pub samples: SampleSet,
    pub params: TentParams,
    /// Most accurate normalizing estimate computed so far.
    pub cached: Option<LogPartitionEstimate>,
    /// Seed for on-demand normalizing estimates.
    pub seed: u64,
}

impl TentDensity {
    pub fn new(samples: SampleSet, params: TentParams, seed: u64) -> Result<Self> {
        if params.len() != samples.n() {
            return Err(Error::InvalidParams(format!(
                "{} heights for {} sample points",
                params.len(),
                samples.n()
            )));
        }
        Ok(TentDensity {
            samples,
            params,
            cached: None,
            seed,
        })
    }

    /// Log normalizing constant to relative error `3 delta`, reusing the
    /// cache when it is at least as accurate as the request.
    pub fn log_partition(&mut self, delta: f64, tau: f64) -> Result<LogPartitionEstimate> {
        if let Some(c) = self.cached {
            if c.delta <= delta {
                return Ok(c);
            }
        }
        let cfg = SamplerConfig {
            delta,
            tau,
            seed: self.seed,
            ..SamplerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (value, rel_err) =
            estimate_log_partition(&self.samples, self.params.values(), &cfg, &mut rng)?;
        let est = LogPartitionEstimate {
            value,
            rel_err,
            delta,
            tau,
            seed: self.seed,
        };
        self.cached = Some(est);
        Ok(est)
    }
}

/// Density value at `x`: `exp(h(x) - A)` inside the hull, zero outside.
/// The normalizing constant is computed on demand at accuracy `(delta,
/// tau)` and cached on the density.
pub fn tent_density_value(
    density: &mut TentDensity,
    x: &[f64],
    delta: f64,
    tau: f64,
) -> Result<f64> {
    match tent_evaluate(&density.samples, density.params.values(), x)? {
        TentValue::OutsideHull => Ok(0.0),
        TentValue::Value(h) => {
            let a = density.log_partition(delta, tau)?;
            Ok((h - a.value).exp())
        }
    }
}

/// The two objective readings for a height vector.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ObjectiveValue {
    /// The concave surrogate actually optimized: `mean(y) - A(y)`.
    pub surrogate: f64,
    /// Average log-likelihood scale: `sum_i h(X_i) - n A(y)`. At least
    /// `n * surrogate` because the tent majorizes its heights.
    pub loglik: f64,
}

/// Evaluates the surrogate and the log-likelihood for `params` given a
/// log normalizing constant `log_partition` (exact or estimated).
pub fn objective_value(
    xset: &SampleSet,
    params: &TentParams,
    log_partition: f64,
) -> Result<ObjectiveValue> {
    let y = params.values();
    if y.len() != xset.n() {
        return Err(Error::InvalidParams(format!(
            "{} heights for {} sample points",
            y.len(),
            xset.n()
        )));
    }
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let mut tent_sum = 0.0;
    for i in 0..xset.n() {
        match tent_evaluate(xset, y, xset.point(i))? {
            TentValue::Value(h) => tent_sum += h,
            TentValue::OutsideHull => {
                return Err(Error::NumericalFailure(
                    "sample point reported outside its own hull".into(),
                ))
            }
        }
    }
    let surrogate = mean_y - log_partition;
    let loglik = tent_sum - xset.n() as f64 * log_partition;
    if !surrogate.is_finite() || !loglik.is_finite() {
        return Err(Error::NonFiniteObjective(format!(
            "surrogate {surrogate}, loglik {loglik}"
        )));
    }
    debug_assert!(
        loglik >= xset.n() as f64 * surrogate - 1e-6,
        "tent sum fell below the height sum"
    );
    Ok(ObjectiveValue { surrogate, loglik })
}

/// Unbiased supergradient of the surrogate at `params` from one draw `s`
/// of the current tent density: the uniform vector minus the
/// hull-combination weights of `s`. Its norm never exceeds
/// `1 + 1/sqrt(n)`.
pub fn stochastic_subgradient(
    xset: &SampleSet,
    params: &TentParams,
    s: &[f64],
) -> Result<Vec<f64>> {
    let n = xset.n();
    let stat = polyhedral_statistic(xset, params.values(), s)?;
    let g: Vec<f64> = stat.weights.iter().map(|t| 1.0 / n as f64 - t).collect();
    #[cfg(debug_assertions)]
    {
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        debug_assert!(
            norm <= 1.0 + 1.0 / (n as f64).sqrt() + 1e-9,
            "supergradient norm {norm} out of bounds"
        );
    }
    Ok(g)
}
