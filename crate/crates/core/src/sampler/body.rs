//! Convex bodies for the walk and volume machinery.
//!
//! Everything downstream (hit-and-run, volume estimation, the superlevel
//! decomposition) talks to a body through [`ConvexBody`]: membership, a
//! usable start point, bounds, and chords. Tent superlevel sets answer
//! chords and box-intersection tests exactly through small LPs; generic
//! membership bodies fall back to bisection against their bounding ball.

use crate::error::{Error, Result};
use crate::lp_core::{
    solve_lp, ConstraintOp, LpProblem, LpStatus, SampleSet, Sense, TentValue, FEAS_TOL,
};

/// A bounded convex body in `R^d` with nonempty interior (degenerate
/// bodies are tolerated but walks on them may report [`Error::WalkStuck`]).
pub trait ConvexBody {
    fn dim(&self) -> usize;

    /// Membership test. May cost an LP solve for polyhedral bodies.
    fn contains(&self, x: &[f64]) -> Result<bool>;

    /// A point inside the body, used to start walks.
    fn interior_point(&self) -> Result<Vec<f64>>;

    /// An axis-aligned box containing the body.
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>);

    /// A ball `(center, radius)` containing the body; defaults to the
    /// bounding box's circumscribed ball.
    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        let (lo, hi) = self.bounding_box();
        let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let radius = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| 0.25 * (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        (center, radius)
    }

    /// A ball known to lie inside the body, when the caller can certify
    /// one; enables the ball-anchored volume scheme.
    fn inscribed_ball(&self) -> Option<(Vec<f64>, f64)> {
        None
    }

    /// The chord of the body through `x` (which must lie in the body)
    /// along the unit direction `u`: returns `(lo, hi)` with `lo <= 0 <=
    /// hi` such that `x + t*u` stays in the body for `t` in `[lo, hi]`.
    fn chord(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        bisection_chord(self, x, u)
    }

    /// Exact test whether the axis box `[lo, hi]` meets the body, when the
    /// body can answer exactly; `None` selects the grid backend's
    /// neighbor-dilation heuristic instead.
    fn box_intersects(&self, _lo: &[f64], _hi: &[f64]) -> Option<Result<bool>> {
        None
    }
}

/// Chord by bisection against `contains`, bracketed by the bounding ball.
/// Costs about 60 membership queries for ~1e-9-relative endpoints.
pub(crate) fn bisection_chord<B: ConvexBody + ?Sized>(
    body: &B,
    x: &[f64],
    u: &[f64],
) -> Result<(f64, f64)> {
    let (c, r) = body.bounding_ball();
    // Roots of |x + t*u - c| = r with |u| = 1; x inside the ball makes the
    // discriminant nonnegative.
    let b: f64 = x.iter().zip(u).zip(&c).map(|((xi, ui), ci)| (xi - ci) * ui).sum();
    let q: f64 = x.iter().zip(&c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() - r * r;
    let disc = (b * b - q).max(0.0);
    let root = disc.sqrt();
    let t_hi = -b + root;
    let t_lo = -b - root;

    let probe = |t: f64| -> Result<bool> {
        let z: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + t * ui).collect();
        body.contains(&z)
    };
    let bisect = |mut inside: f64, mut outside: f64| -> Result<f64> {
        if probe(outside)? {
            return Ok(outside);
        }
        for _ in 0..30 {
            let mid = 0.5 * (inside + outside);
            if probe(mid)? {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    };
    let hi = bisect(0.0, t_hi.max(0.0))?;
    let lo = bisect(0.0, t_lo.min(0.0))?;
    Ok((lo.min(0.0), hi.max(0.0)))
}

/// A superlevel set of the tent function: `{x : h(x) >= threshold}` in log
/// space, or the whole hull when `threshold` is `None`. Chords and box
/// tests are answered exactly by LPs over the hull-combination weights.
pub struct TentLevelSet<'a> {
    xset: &'a SampleSet,
    y: &'a [f64],
    threshold: Option<f64>,
    start: Vec<f64>,
    bbox: (Vec<f64>, Vec<f64>),
}

impl<'a> TentLevelSet<'a> {
    /// Builds the level set and finds a start point by pulling the highest
    /// pole toward the hull centroid just far enough to clear the level.
    pub fn new(xset: &'a SampleSet, y: &'a [f64], threshold: Option<f64>) -> Result<Self> {
        if y.len() != xset.n() {
            return Err(Error::InvalidParams(format!(
                "{} heights for {} points",
                y.len(),
                xset.n()
            )));
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for i in 0..xset.n() {
            let h = tent_at(xset, y, xset.point(i))?.ok_or_else(|| {
                Error::NumericalFailure("sample point reported outside its own hull".into())
            })?;
            if h > best.1 {
                best = (i, h);
            }
        }
        Self::with_peak(xset, y, threshold, best.0, best.1)
    }

    /// As [`TentLevelSet::new`] with the highest pole already known.
    pub(crate) fn with_peak(
        xset: &'a SampleSet,
        y: &'a [f64],
        threshold: Option<f64>,
        peak_index: usize,
        peak_value: f64,
    ) -> Result<Self> {
        let start = match threshold {
            None => xset.centroid(),
            Some(t) => {
                if t > peak_value + 1e-9 {
                    return Err(Error::InvalidParams(format!(
                        "level threshold {t} exceeds the tent maximum {peak_value}"
                    )));
                }
                let pole = xset.point(peak_index);
                let g = xset.centroid();
                let hg = tent_at(xset, y, &g)?
                    .ok_or_else(|| Error::NumericalFailure("hull centroid outside hull".into()))?;
                // h((1-s) pole + s g) >= peak - s (peak - hg); keep half the
                // headroom so the start is strictly interior to the level.
                let headroom = (peak_value - t).max(0.0);
                let s = if hg >= t {
                    0.5
                } else {
                    (0.5 * headroom / (peak_value - hg)).min(0.5)
                };
                pole.iter().zip(&g).map(|(p, gi)| p + s * (gi - p)).collect()
            }
        };
        Ok(TentLevelSet {
            xset,
            y,
            threshold,
            start,
            bbox: xset.bounding_box(),
        })
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    /// Exact extent `[min, max]` of a one-dimensional level set, via the
    /// two extreme hull combinations meeting the level.
    pub fn interval(&self) -> Result<(f64, f64)> {
        if self.xset.d() != 1 {
            return Err(Error::InvalidParams("interval extent requires dimension 1".into()));
        }
        let n = self.xset.n();
        let xs: Vec<f64> = (0..n).map(|i| self.xset.point(i)[0]).collect();
        match self.threshold {
            None => {
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok((lo, hi))
            }
            Some(t) => {
                let mut endpoints = [0.0f64; 2];
                for (k, sense) in [(0, Sense::Minimize), (1, Sense::Maximize)] {
                    let mut lp = LpProblem::new(sense, xs.clone());
                    lp.push(vec![1.0; n], ConstraintOp::Eq, 1.0);
                    lp.push(self.y.to_vec(), ConstraintOp::Ge, t);
                    let sol = solve_lp(&lp, FEAS_TOL)?;
                    if sol.status != LpStatus::Optimal {
                        return Err(Error::NumericalFailure(
                            "level-extent LP did not reach an optimum".into(),
                        ));
                    }
                    endpoints[k] = sol.objective;
                }
                Ok((endpoints[0], endpoints[1]))
            }
        }
    }
}

fn tent_at(xset: &SampleSet, y: &[f64], x: &[f64]) -> Result<Option<f64>> {
    match crate::lp_core::tent_evaluate(xset, y, x)? {
        TentValue::Value(h) => Ok(Some(h)),
        TentValue::OutsideHull => Ok(None),
    }
}

impl ConvexBody for TentLevelSet<'_> {
    fn dim(&self) -> usize {
        self.xset.d()
    }

    fn contains(&self, x: &[f64]) -> Result<bool> {
        match tent_at(self.xset, self.y, x)? {
            None => Ok(false),
            Some(h) => Ok(match self.threshold {
                None => true,
                Some(t) => h >= t,
            }),
        }
    }

    fn interior_point(&self) -> Result<Vec<f64>> {
        Ok(self.start.clone())
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.bbox.clone()
    }

    fn chord(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        // Variables: alpha_0..alpha_{n-1}, then t split as t+ - t-.
        // Constraints: X'alpha - t u = x, 1'alpha = 1, y'alpha >= threshold.
        let n = self.xset.n();
        let d = self.xset.d();
        let mut endpoints = [0.0f64; 2];
        for (k, sign) in [(0usize, -1.0f64), (1usize, 1.0f64)] {
            let mut obj = vec![0.0; n + 2];
            obj[n] = sign;
            obj[n + 1] = -sign;
            let mut lp = LpProblem::new(Sense::Maximize, obj);
            for j in 0..d {
                let mut row = vec![0.0; n + 2];
                for i in 0..n {
                    row[i] = self.xset.point(i)[j];
                }
                row[n] = -u[j];
                row[n + 1] = u[j];
                lp.push(row, ConstraintOp::Eq, x[j]);
            }
            let mut ones = vec![1.0; n];
            ones.extend_from_slice(&[0.0, 0.0]);
            lp.push(ones, ConstraintOp::Eq, 1.0);
            if let Some(t) = self.threshold {
                let mut level = self.y.to_vec();
                level.extend_from_slice(&[0.0, 0.0]);
                lp.push(level, ConstraintOp::Ge, t);
            }
            let sol = solve_lp(&lp, FEAS_TOL)?;
            match sol.status {
                LpStatus::Optimal => endpoints[k] = sign * sol.objective,
                LpStatus::Infeasible => {
                    return Err(Error::NumericalFailure(
                        "chord query point left the level set".into(),
                    ))
                }
                LpStatus::Unbounded => {
                    return Err(Error::NumericalFailure(
                        "unbounded chord in a bounded level set".into(),
                    ))
                }
            }
        }
        Ok((endpoints[0].min(0.0), endpoints[1].max(0.0)))
    }

    fn box_intersects(&self, lo: &[f64], hi: &[f64]) -> Option<Result<bool>> {
        let n = self.xset.n();
        let d = self.xset.d();
        let mut lp = LpProblem::new(Sense::Minimize, vec![0.0; n]);
        for j in 0..d {
            let col: Vec<f64> = (0..n).map(|i| self.xset.point(i)[j]).collect();
            lp.push(col.clone(), ConstraintOp::Le, hi[j]);
            lp.push(col, ConstraintOp::Ge, lo[j]);
        }
        lp.push(vec![1.0; n], ConstraintOp::Eq, 1.0);
        if let Some(t) = self.threshold {
            lp.push(self.y.to_vec(), ConstraintOp::Ge, t);
        }
        Some(match solve_lp(&lp, FEAS_TOL) {
            Ok(sol) => Ok(sol.status == LpStatus::Optimal),
            Err(e) => Err(e),
        })
    }
}

/// A convex body given only by a membership closure, a strictly interior
/// point, and a bounding box — the oracle model of the volume machinery.
pub struct MembershipBody<F: Fn(&[f64]) -> bool> {
    contains_fn: F,
    dim: usize,
    interior: Vec<f64>,
    bbox: (Vec<f64>, Vec<f64>),
    inscribed: Option<(Vec<f64>, f64)>,
}

impl<F: Fn(&[f64]) -> bool> MembershipBody<F> {
    pub fn new(
        dim: usize,
        contains_fn: F,
        interior: Vec<f64>,
        bounding_box: (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        if interior.len() != dim || bounding_box.0.len() != dim || bounding_box.1.len() != dim {
            return Err(Error::InvalidParams("dimension mismatch in membership body".into()));
        }
        if !contains_fn(&interior) {
            return Err(Error::InvalidParams(
                "claimed interior point fails the membership test".into(),
            ));
        }
        Ok(MembershipBody {
            contains_fn,
            dim,
            interior,
            bbox: bounding_box,
            inscribed: None,
        })
    }

    /// Declares a ball certified by the caller to lie inside the body.
    pub fn with_inscribed_ball(mut self, center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() != self.dim || !(radius > 0.0) {
            return Err(Error::InvalidParams("bad inscribed ball".into()));
        }
        self.inscribed = Some((center, radius));
        Ok(self)
    }
}

impl<F: Fn(&[f64]) -> bool> ConvexBody for MembershipBody<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok((self.contains_fn)(x))
    }

    fn interior_point(&self) -> Result<Vec<f64>> {
        Ok(self.interior.clone())
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.bbox.clone()
    }

    fn inscribed_ball(&self) -> Option<(Vec<f64>, f64)> {
        self.inscribed.clone()
    }
}

/// The intersection of a body with a ball, used as one annealing phase of
/// the ball-anchored volume scheme. The chord intersects the inner body's
/// chord with the ball chord in closed form.
pub struct BallIntersection<'a> {
    pub(crate) body: &'a dyn ConvexBody,
    pub(crate) center: Vec<f64>,
    pub(crate) radius: f64,
}

impl ConvexBody for BallIntersection<'_> {
    fn dim(&self) -> usize {
        self.body.dim()
    }

    fn contains(&self, x: &[f64]) -> Result<bool> {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        if d2 > self.radius * self.radius {
            return Ok(false);
        }
        self.body.contains(x)
    }

    fn interior_point(&self) -> Result<Vec<f64>> {
        Ok(self.center.clone())
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.body.bounding_box();
        let blo: Vec<f64> = self
            .center
            .iter()
            .zip(&lo)
            .map(|(c, l)| (c - self.radius).max(*l))
            .collect();
        let bhi: Vec<f64> = self
            .center
            .iter()
            .zip(&hi)
            .map(|(c, h)| (c + self.radius).min(*h))
            .collect();
        (blo, bhi)
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.radius)
    }

    fn chord(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        let (blo, bhi) = self.body.chord(x, u)?;
        let b: f64 = x
            .iter()
            .zip(u)
            .zip(&self.center)
            .map(|((xi, ui), ci)| (xi - ci) * ui)
            .sum();
        let q: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum::<f64>()
            - self.radius * self.radius;
        let disc = (b * b - q).max(0.0);
        let root = disc.sqrt();
        Ok(((-b - root).max(blo).min(0.0), (-b + root).min(bhi).max(0.0)))
    }
}
