//! Sampling from tent densities and estimating their normalizing constant.
//!
//! The tent function `h` is piecewise linear with maximum `M` over the
//! hull of the sample points. Slicing its graph at `M - ln 2`, `M - 2 ln
//! 2`, ... yields nested convex superlevel sets whose last member is the
//! whole hull; the union of "level set x dyadic weight" boxes majorizes
//! the density `exp(h)`. Rejection sampling against that majorant gives
//! exact draws whose acceptance rate is bounded below by a constant, and
//! averaging the acceptance probability turns the same machinery into a
//! multiplicative estimator of the normalizing constant.
//!
//! Level volumes come from one of two backends: a certified grid count
//! (dimension <= 3) or Monte Carlo annealing around an exactly computable
//! anchor body. One-dimensional levels are intervals with exact widths,
//! so both backends are exact there.
//!
//! Level sets whose estimated volume is zero are merged into the next
//! larger level: the mixture simply never proposes from them, and the
//! acceptance weights account for the missing components exactly, so
//! draws remain exact (only the acceptance rate degrades, tracked by the
//! `kappa` inflation factor).

pub mod body;
mod volume;
mod walk;

pub use body::{BallIntersection, ConvexBody, MembershipBody, TentLevelSet};

use crate::error::{Error, Result};
use crate::lp_core::{tent_evaluate, SampleSet, TentValue};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// How level-set volumes are estimated in dimension two and above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeBackend {
    /// Certified cell counting; exact dimensions 1-3 geometry only.
    Grid,
    /// Annealed Monte Carlo; any dimension, randomized certification.
    #[serde(rename = "mc")]
    MonteCarlo,
}

/// Accuracy and reproducibility knobs shared by the sampling entry points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Target relative error for volumes and the partition estimate.
    pub delta: f64,
    /// Failure probability budget for randomized estimates.
    pub tau: f64,
    /// Seed for every internal random stream.
    pub seed: u64,
    /// Hit-and-run steps per uniform draw; `None` picks `100 d^2`.
    pub walk_steps: Option<usize>,
    pub volume_backend: VolumeBackend,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            delta: 0.02,
            tau: 0.05,
            seed: 7,
            walk_steps: None,
            volume_backend: VolumeBackend::Grid,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParams(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.walk_steps == Some(0) {
            return Err(Error::InvalidParams("walk_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_walk_steps(&self, d: usize) -> usize {
        self.walk_steps.unwrap_or(100 * d * d).max(1)
    }
}

/// A volume value together with the relative error it is certified (grid)
/// or calibrated (Monte Carlo) to achieve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub rel_err: f64,
}

/// Rejection-sampling effort counters.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SampleStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl SampleStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposals as f64
    }
}

/// One proposal from the level-set mixture: a point, the log of its
/// acceptance probability, and the level it was drawn from (0-based).
#[derive(Debug, Clone)]
pub struct Proposal {
    pub point: Vec<f64>,
    pub log_accept: f64,
    pub level: usize,
}

/// The superlevel-set mixture for one tent function, with everything the
/// rejection sampler and partition estimator need precomputed.
#[derive(Debug, Clone)]
pub struct LevelSetDecomposition {
    samples: SampleSet,
    y: Vec<f64>,
    cfg: SamplerConfig,
    heights: Vec<f64>,
    peak_index: usize,
    log_peak: f64,
    /// Level thresholds, innermost first; the last entry is `None` for the
    /// full hull.
    thresholds: Vec<Option<f64>>,
    volumes: Vec<VolumeEstimate>,
    weights: Vec<f64>,
    log_cnorm: f64,
    /// `log_suffix[j-1] = ln(sum_{i >= j, vol_i > 0} 2^-i + [vol_m > 0] 2^-m)`
    /// for 1-based level `j`: the mixture mass covering a point whose
    /// innermost level is `j`, scaled by `cnorm`.
    log_suffix: Vec<f64>,
    /// Acceptance inflation from merged (zero-volume) levels; 0 when none.
    log_kappa: f64,
    /// Exact level intervals in dimension one.
    intervals: Option<Vec<(f64, f64)>>,
    achieved_delta: f64,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::NEG_INFINITY;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Builds the decomposition, failing if any positive level volume misses
/// the requested relative error `cfg.delta`.
pub fn build_decomposition(
    xset: &SampleSet,
    y: &[f64],
    cfg: &SamplerConfig,
) -> Result<LevelSetDecomposition> {
    let dec = build_decomposition_relaxed(xset, y, cfg)?;
    if dec.achieved_delta > cfg.delta * (1.0 + 1e-12) {
        return Err(Error::VolumeFailure(format!(
            "level volumes certified to relative error {:.3e}, needed {:.3e}",
            dec.achieved_delta, cfg.delta
        )));
    }
    Ok(dec)
}

/// Builds the decomposition with best-effort volumes, recording the worst
/// relative error actually achieved instead of failing on it. Draws stay
/// exact either way; only the partition estimate inherits the volume
/// error.
pub fn build_decomposition_relaxed(
    xset: &SampleSet,
    y: &[f64],
    cfg: &SamplerConfig,
) -> Result<LevelSetDecomposition> {
    cfg.validate()?;
    let n = xset.n();
    let d = xset.d();
    if y.len() != n {
        return Err(Error::InvalidParams(format!(
            "{} heights for {} sample points",
            y.len(),
            n
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("tent heights must be finite".into()));
    }

    let mut heights = Vec::with_capacity(n);
    for i in 0..n {
        match tent_evaluate(xset, y, xset.point(i))? {
            TentValue::Value(h) => heights.push(h),
            TentValue::OutsideHull => {
                return Err(Error::NumericalFailure(
                    "sample point reported outside its own hull".into(),
                ))
            }
        }
    }
    let (peak_index, log_peak) = heights
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, &h)| (i, h))
        .unwrap();

    let sup = y.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let m = ((1.0 + 2.0 * sup).ceil() as usize).max(1);
    let thresholds: Vec<Option<f64>> = (1..=m)
        .map(|i| {
            if i == m {
                None
            } else {
                Some(log_peak - i as f64 * LN_2)
            }
        })
        .collect();

    let mut intervals = None;
    let volumes: Vec<VolumeEstimate> = if d == 1 {
        let mut iv = Vec::with_capacity(m);
        for t in &thresholds {
            let set = TentLevelSet::with_peak(xset, y, *t, peak_index, log_peak)?;
            iv.push(set.interval()?);
        }
        let vols = iv
            .iter()
            .map(|(lo, hi)| VolumeEstimate {
                value: (hi - lo).max(0.0),
                rel_err: 0.0,
            })
            .collect();
        intervals = Some(iv);
        vols
    } else {
        // Volume estimation consumes its own stream derived from the seed
        // so rebuilding a decomposition is reproducible regardless of what
        // the caller's generator has been used for.
        let mut vrng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        match cfg.volume_backend {
            VolumeBackend::Grid => {
                let mut vols = Vec::with_capacity(m);
                for t in &thresholds {
                    let set = TentLevelSet::with_peak(xset, y, *t, peak_index, log_peak)?;
                    vols.push(volume::grid_volume(&set, cfg.delta)?);
                }
                vols
            }
            VolumeBackend::MonteCarlo => volume::mc_tent_level_volumes(
                xset,
                y,
                &thresholds,
                peak_index,
                log_peak,
                cfg.delta,
                cfg.tau,
                cfg.effective_walk_steps(d),
                &mut vrng,
            )?,
        }
    };

    if volumes.iter().all(|v| !(v.value > 0.0)) {
        return Err(Error::DegenerateSupport(
            "every level volume is zero; the sample points may not span the ambient dimension"
                .into(),
        ));
    }
    let achieved_delta = volumes
        .iter()
        .filter(|v| v.value > 0.0)
        .map(|v| v.rel_err)
        .fold(0.0f64, f64::max);

    // Mixture weights: level i gets 2^-i * vol_i, with the outermost level
    // doubled so the majorant covers the tail below the last threshold.
    let raw_log: Vec<f64> = volumes
        .iter()
        .enumerate()
        .map(|(li, v)| {
            if v.value > 0.0 {
                let doubled = if li == m - 1 { LN_2 } else { 0.0 };
                -((li + 1) as f64) * LN_2 + v.value.ln() + doubled
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let log_cnorm = log_sum_exp(raw_log.iter().cloned());
    let weights: Vec<f64> = raw_log.iter().map(|r| (r - log_cnorm).exp()).collect();

    let present: Vec<bool> = volumes.iter().map(|v| v.value > 0.0).collect();
    let log_suffix: Vec<f64> = (1..=m)
        .map(|j| {
            let terms = (j..=m)
                .filter(|&i| present[i - 1])
                .map(|i| -(i as f64) * LN_2)
                .chain(present[m - 1].then_some(-(m as f64) * LN_2));
            log_sum_exp(terms)
        })
        .collect();
    let log_kappa = (1..=m)
        .map(|j| -((j - 1) as f64) * LN_2 - log_suffix[j - 1])
        .fold(0.0f64, f64::max);

    Ok(LevelSetDecomposition {
        samples: xset.clone(),
        y: y.to_vec(),
        cfg: cfg.clone(),
        heights,
        peak_index,
        log_peak,
        thresholds,
        volumes,
        weights,
        log_cnorm,
        log_suffix,
        log_kappa,
        intervals,
        achieved_delta,
    })
}

impl LevelSetDecomposition {
    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn heights_at_samples(&self) -> &[f64] {
        &self.heights
    }

    /// Maximum of the tent function over the hull.
    pub fn log_peak(&self) -> f64 {
        self.log_peak
    }

    /// Number of levels `m`.
    pub fn levels(&self) -> usize {
        self.thresholds.len()
    }

    /// Threshold of 0-based level `li`; `None` marks the full hull.
    pub fn threshold(&self, li: usize) -> Option<f64> {
        self.thresholds[li]
    }

    pub fn volumes(&self) -> &[VolumeEstimate] {
        &self.volumes
    }

    pub fn mixture_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Log of the dyadic-weighted volume sum normalizing the mixture.
    pub fn log_cnorm(&self) -> f64 {
        self.log_cnorm
    }

    /// Log of the acceptance inflation from merged levels (0 when none).
    pub fn log_kappa(&self) -> f64 {
        self.log_kappa
    }

    /// Worst volume relative error actually achieved across levels.
    pub fn achieved_delta(&self) -> f64 {
        self.achieved_delta
    }

    pub fn level_contains(&self, li: usize, x: &[f64]) -> Result<bool> {
        match tent_evaluate(&self.samples, &self.y, x)? {
            TentValue::OutsideHull => Ok(false),
            TentValue::Value(h) => Ok(match self.thresholds[li] {
                None => true,
                Some(t) => h >= t,
            }),
        }
    }

    /// The 0-based level `li` as a walkable convex body.
    pub fn level_body(&self, li: usize) -> Result<TentLevelSet<'_>> {
        TentLevelSet::with_peak(
            &self.samples,
            &self.y,
            self.thresholds[li],
            self.peak_index,
            self.log_peak,
        )
    }

    /// Draws one proposal from the level-set mixture and computes its
    /// acceptance probability.
    pub fn propose<R: Rng>(&self, rng: &mut R) -> Result<Proposal> {
        let m = self.levels();
        let u: f64 = rng.gen();
        let mut level = None;
        let mut acc = 0.0;
        for (li, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                level = Some(li);
                break;
            }
        }
        let li = match level {
            Some(li) => li,
            None => (0..m)
                .rev()
                .find(|&li| self.weights[li] > 0.0)
                .expect("some level has positive weight"),
        };

        let point = match &self.intervals {
            Some(iv) => {
                let (lo, hi) = iv[li];
                vec![lo + (hi - lo) * rng.gen::<f64>()]
            }
            None => {
                let body = self.level_body(li)?;
                let start = body.interior_point()?;
                let steps = self.cfg.effective_walk_steps(self.samples.d());
                walk::hit_and_run(&body, &start, steps, rng)?
            }
        };

        let log_accept = match tent_evaluate(&self.samples, &self.y, &point)? {
            TentValue::OutsideHull => f64::NEG_INFINITY,
            TentValue::Value(h) => {
                #[cfg(debug_assertions)]
                {
                    let g = self.log_peak - ((self.log_peak - h) / LN_2).floor() * LN_2;
                    debug_assert!(
                        h <= g + 1e-9 && h >= g - LN_2 - 1e-9,
                        "dyadic bracket violated: h = {h}, bracket top = {g}"
                    );
                }
                let jmin = ((self.log_peak - h) / LN_2).ceil().clamp(1.0, m as f64) as usize;
                let la = h - self.log_peak - self.log_suffix[jmin - 1] - self.log_kappa;
                if la > 1e-6 {
                    return Err(Error::NumericalFailure(format!(
                        "acceptance probability exceeded 1 (log {la:.3e})"
                    )));
                }
                la.min(0.0)
            }
        };
        Ok(Proposal {
            point,
            log_accept,
            level: li,
        })
    }

    /// One exact draw from the tent density, tallying effort into `stats`.
    pub fn sample_with_stats<R: Rng>(
        &self,
        rng: &mut R,
        stats: &mut SampleStats,
    ) -> Result<Vec<f64>> {
        let cap = ((64.0 * (1.0 / self.cfg.tau).ln()).ceil() as usize).max(1);
        for _ in 0..cap {
            let prop = self.propose(rng)?;
            stats.proposals += 1;
            if rng.gen::<f64>().ln() < prop.log_accept {
                stats.accepted += 1;
                return Ok(prop.point);
            }
        }
        Err(Error::RetryExhausted(cap))
    }

    /// One exact draw from the tent density.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mut stats = SampleStats::default();
        self.sample_with_stats(rng, &mut stats)
    }

    /// Estimates the log normalizing constant `ln integral exp(h)` by
    /// averaging acceptance probabilities over the mixture; returns the
    /// estimate and its relative error bound `3 delta` (on the constant,
    /// not its log), which holds with probability `1 - tau` given volumes
    /// within `delta`.
    pub fn log_partition<R: Rng>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let delta = self.cfg.delta;
        if delta >= 1.0 / 16.0 {
            return Err(Error::InvalidParams(format!(
                "partition estimation needs delta < 1/16, got {delta}"
            )));
        }
        let trials = (8.0 * (2.0 / self.cfg.tau).ln() / (delta * delta)).ceil() as usize;
        let estimate = self.log_partition_with_trials(trials, rng)?;
        Ok((estimate, 3.0 * delta))
    }

    /// Diagnostic-grade log-partition estimate from a caller-chosen number
    /// of proposals; quantifying the error is the caller's business.
    pub fn log_partition_with_trials<R: Rng>(&self, trials: usize, rng: &mut R) -> Result<f64> {
        if trials == 0 {
            return Err(Error::InvalidParams("need at least one trial".into()));
        }
        let mut acc_sum = 0.0f64;
        for _ in 0..trials {
            acc_sum += self.propose(rng)?.log_accept.exp();
        }
        if acc_sum <= 0.0 {
            return Err(Error::NumericalFailure(
                "no proposal carried acceptance mass".into(),
            ));
        }
        let mean_accept = acc_sum / trials as f64;
        Ok(self.log_peak + self.log_cnorm + self.log_kappa + mean_accept.ln())
    }
}

/// One approximately uniform draw from a convex body by hit-and-run.
pub fn uniform_sample<R: Rng>(
    body: &dyn ConvexBody,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let start = body.interior_point()?;
    walk::hit_and_run(body, &start, cfg.effective_walk_steps(body.dim()), rng)
}

/// Volume of a convex body to relative error `cfg.delta`, by the backend
/// selected in `cfg`.
pub fn estimate_volume<R: Rng>(
    body: &dyn ConvexBody,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<VolumeEstimate> {
    cfg.validate()?;
    match cfg.volume_backend {
        VolumeBackend::Grid => {
            let est = volume::grid_volume(body, cfg.delta)?;
            if est.rel_err > cfg.delta * (1.0 + 1e-12) {
                return Err(Error::ToleranceNotMet {
                    requested: cfg.delta,
                    achieved: est.rel_err,
                });
            }
            Ok(est)
        }
        VolumeBackend::MonteCarlo => volume::mc_volume_ball_anchored(
            body,
            cfg.delta,
            cfg.tau,
            cfg.effective_walk_steps(body.dim()),
            rng,
        ),
    }
}

/// One exact draw from the density proportional to `exp(h)` for the tent
/// of `(xset, y)`.
pub fn sample_tent<R: Rng>(
    xset: &SampleSet,
    y: &[f64],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    build_decomposition(xset, y, cfg)?.sample(rng)
}

/// Estimate of `ln integral_hull exp(h)` with its relative error bound;
/// see [`LevelSetDecomposition::log_partition`].
pub fn estimate_log_partition<R: Rng>(
    xset: &SampleSet,
    y: &[f64],
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(f64, f64)> {
    build_decomposition(xset, y, cfg)?.log_partition(rng)
}
