//! Independent verification oracles.
//!
//! Everything here recomputes quantities the main pipeline produces, by a
//! different route: the one-dimensional upper concave envelope is built by
//! a direct monotone-chain hull rather than by LP, the log-partition
//! function is integrated in closed form per envelope segment, tiny
//! maximum-likelihood problems are solved by exhaustive grid search, and
//! gradients come from central differences. Tests cross-validate the two
//! routes against each other; this module must therefore not reuse the LP
//! solver for anything one-dimensional.

use crate::error::{Error, Result};
use crate::lp_core::{tent_evaluate, SampleSet};
use rand::Rng;
use std::collections::BinaryHeap;

/// The upper concave envelope of lifted one-dimensional points: a sorted
/// knot sequence whose linear interpolation majorizes every input pole and
/// is concave. The tent function in dimension one.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearLogDensity1D {
    /// Strictly increasing abscissae with their log-density values.
    knots: Vec<(f64, f64)>,
    /// Index into the input points for each knot.
    sources: Vec<usize>,
}

impl PiecewiseLinearLogDensity1D {
    /// Builds the envelope of `(xs[i], ys[i])` by sorting and a monotone
    /// chain upper hull. Duplicate abscissae keep the larger height.
    pub fn upper_envelope(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::InvalidParams(
                "envelope needs equal, nonzero numbers of abscissae and heights".into(),
            ));
        }
        if !xs.iter().chain(ys).all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("non-finite envelope input".into()));
        }
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| {
            xs[a].partial_cmp(&xs[b])
                .unwrap()
                .then(ys[b].partial_cmp(&ys[a]).unwrap())
        });
        // Drop lower duplicates at equal abscissae.
        order.dedup_by(|b, a| xs[*a] == xs[*b]);
        if order.len() < 2 {
            return Err(Error::DegenerateSupport(
                "all points share one abscissa".into(),
            ));
        }

        // Monotone chain for the upper hull: pop while the middle knot is
        // at or below the chord of its neighbors.
        let mut hull: Vec<usize> = Vec::with_capacity(order.len());
        for &i in &order {
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(i);
        }

        Ok(PiecewiseLinearLogDensity1D {
            knots: hull.iter().map(|&i| (xs[i], ys[i])).collect(),
            sources: hull,
        })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Input indices of the points supporting the envelope.
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Envelope value at `t`, `None` outside the support.
    pub fn value(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return None;
        }
        let seg = self.knots.partition_point(|&(x, _)| x <= t);
        if seg == 0 {
            return Some(self.knots[0].1);
        }
        if seg == self.knots.len() {
            return Some(self.knots[seg - 1].1);
        }
        let (xa, ya) = self.knots[seg - 1];
        let (xb, yb) = self.knots[seg];
        Some(ya + (yb - ya) * (t - xa) / (xb - xa))
    }

    /// Integral of `exp` over one linear segment, stable when the slope is
    /// near zero: `(b-a) * e^a_y * (e^dy - 1) / dy`.
    fn segment_mass(xa: f64, ya: f64, xb: f64, yb: f64, shift: f64) -> f64 {
        let w = xb - xa;
        let dy = yb - ya;
        let base = (ya - shift).exp();
        if dy.abs() < 1e-12 {
            w * base
        } else {
            w * base * dy.exp_m1() / dy
        }
    }

    /// Log of the integral of `exp(envelope)` over the support.
    pub fn log_partition(&self) -> f64 {
        let shift = self
            .knots
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for pair in self.knots.windows(2) {
            let (xa, ya) = pair[0];
            let (xb, yb) = pair[1];
            total += Self::segment_mass(xa, ya, xb, yb, shift);
        }
        shift + total.ln()
    }

    /// CDF of the normalized density at `t`, clamped to `[0, 1]`.
    pub fn cdf(&self, t: f64) -> f64 {
        let shift = self
            .knots
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut below = 0.0;
        for pair in self.knots.windows(2) {
            let (xa, ya) = pair[0];
            let (xb, yb) = pair[1];
            let mass = Self::segment_mass(xa, ya, xb, yb, shift);
            total += mass;
            if t >= xb {
                below += mass;
            } else if t > xa {
                let yt = ya + (yb - ya) * (t - xa) / (xb - xa);
                below += Self::segment_mass(xa, ya, t, yt, shift);
            }
        }
        (below / total).clamp(0.0, 1.0)
    }

    /// Exact inverse-CDF draw from the normalized density.
    pub fn sample_exact<R: Rng>(&self, rng: &mut R) -> f64 {
        let shift = self
            .knots
            .iter()
            .map(|&(_, y)| y)
            .fold(f64::NEG_INFINITY, f64::max);
        let masses: Vec<f64> = self
            .knots
            .windows(2)
            .map(|p| Self::segment_mass(p[0].0, p[0].1, p[1].0, p[1].1, shift))
            .collect();
        let total: f64 = masses.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (seg, &mass) in masses.iter().enumerate() {
            if u > mass && seg + 1 < masses.len() {
                u -= mass;
                continue;
            }
            let (xa, ya) = self.knots[seg];
            let (xb, yb) = self.knots[seg + 1];
            let slope = (yb - ya) / (xb - xa);
            // Invert the segment CDF: u = int_xa^x exp(ya + s(t - xa)) dt,
            // all relative to `shift`.
            let base = (ya - shift).exp();
            if slope.abs() < 1e-12 {
                return xa + (u / base).min(xb - xa);
            }
            let x = xa + ((u * slope / base) + 1.0).ln() / slope;
            return x.clamp(xa, xb);
        }
        unreachable!("segment selection covers the full mass");
    }
}

fn one_dimensional(xset: &SampleSet) -> Result<Vec<f64>> {
    if xset.d() != 1 {
        return Err(Error::InvalidParams(format!(
            "oracle requires dimension 1, got {}",
            xset.d()
        )));
    }
    Ok(xset.points().iter().map(|p| p[0]).collect())
}

/// Log-partition function `A(y) = ln \int exp(envelope)` in dimension one,
/// by closed-form segment integrals. Heights need not be normalized.
pub fn exact_partition_1d(xset: &SampleSet, y: &[f64]) -> Result<f64> {
    let xs = one_dimensional(xset)?;
    if y.len() != xs.len() {
        return Err(Error::InvalidParams("height count mismatch".into()));
    }
    Ok(PiecewiseLinearLogDensity1D::upper_envelope(&xs, y)?.log_partition())
}

/// Integrates `f` over the convex hull of two-dimensional points with
/// adaptive triangle refinement, certified to relative error `tol`.
pub fn integrate_over_hull_2d(
    xset: &SampleSet,
    f: &dyn Fn(&[f64]) -> f64,
    tol: f64,
    max_evals: usize,
) -> Result<f64> {
    if xset.d() != 2 {
        return Err(Error::InvalidParams("hull quadrature requires dimension 2".into()));
    }
    let hull = convex_hull_2d(xset.points());
    // Fan triangulation from the first hull vertex.
    let mut triangles: Vec<[[f64; 2]; 3]> = Vec::new();
    for i in 1..hull.len() - 1 {
        triangles.push([hull[0], hull[i], hull[i + 1]]);
    }
    integrate_triangles(&triangles, f, tol, max_evals)
}

/// Log-partition function in dimension two by adaptive quadrature of the
/// exponentiated tent, certified to relative error `tol`.
pub fn exact_partition_2d(xset: &SampleSet, y: &[f64], tol: f64) -> Result<f64> {
    if y.len() != xset.n() {
        return Err(Error::InvalidParams("height count mismatch".into()));
    }
    let shift = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f = |p: &[f64]| -> f64 {
        match tent_evaluate(xset, y, p) {
            Ok(v) => v.finite().map(|h| (h - shift).exp()).unwrap_or(0.0),
            Err(_) => 0.0,
        }
    };
    let integral = integrate_over_hull_2d(xset, &f, tol, 400_000)?;
    Ok(shift + integral.ln())
}

/// Counterclockwise convex hull of points in the plane (monotone chain).
fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct QuadNode {
    error: f64,
    value: f64,
    tri: [[f64; 2]; 3],
    depth: u32,
}

impl PartialEq for QuadNode {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for QuadNode {}
impl PartialOrd for QuadNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QuadNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.partial_cmp(&other.error).unwrap()
    }
}

fn tri_area(t: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))
        .abs()
}

/// Degree-2 midpoint rule: exact for affine integrands on a triangle.
fn tri_quad(t: &[[f64; 2]; 3], f: &dyn Fn(&[f64]) -> f64, evals: &mut usize) -> f64 {
    let mids = [
        [(t[0][0] + t[1][0]) / 2.0, (t[0][1] + t[1][1]) / 2.0],
        [(t[1][0] + t[2][0]) / 2.0, (t[1][1] + t[2][1]) / 2.0],
        [(t[2][0] + t[0][0]) / 2.0, (t[2][1] + t[0][1]) / 2.0],
    ];
    *evals += 3;
    tri_area(t) * (f(&mids[0]) + f(&mids[1]) + f(&mids[2])) / 3.0
}

fn split4(t: &[[f64; 2]; 3]) -> [[[f64; 2]; 3]; 4] {
    let m01 = [(t[0][0] + t[1][0]) / 2.0, (t[0][1] + t[1][1]) / 2.0];
    let m12 = [(t[1][0] + t[2][0]) / 2.0, (t[1][1] + t[2][1]) / 2.0];
    let m20 = [(t[2][0] + t[0][0]) / 2.0, (t[2][1] + t[0][1]) / 2.0];
    [
        [t[0], m01, m20],
        [m01, t[1], m12],
        [m20, m12, t[2]],
        [m01, m12, m20],
    ]
}

fn integrate_triangles(
    triangles: &[[[f64; 2]; 3]],
    f: &dyn Fn(&[f64]) -> f64,
    tol: f64,
    max_evals: usize,
) -> Result<f64> {
    let mut evals = 0usize;
    let mut heap: BinaryHeap<QuadNode> = BinaryHeap::new();
    let mut total = 0.0;
    for t in triangles {
        if tri_area(t) <= 0.0 {
            continue;
        }
        let coarse = tri_quad(t, f, &mut evals);
        let fine: f64 = split4(t).iter().map(|s| tri_quad(s, f, &mut evals)).sum();
        total += fine;
        heap.push(QuadNode {
            error: (fine - coarse).abs(),
            value: fine,
            tri: *t,
            depth: 0,
        });
    }

    loop {
        let err_sum: f64 = heap.iter().map(|n| n.error).sum();
        if err_sum <= tol * total.abs().max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
        if evals > max_evals {
            return Err(Error::ToleranceNotMet {
                requested: tol,
                achieved: err_sum / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        let node = heap.pop().expect("nonempty heap while error remains");
        total -= node.value;
        for child in split4(&node.tri) {
            let coarse = tri_quad(&child, f, &mut evals);
            let fine: f64 = split4(&child)
                .iter()
                .map(|s| tri_quad(s, f, &mut evals))
                .sum();
            total += fine;
            heap.push(QuadNode {
                error: (fine - coarse).abs(),
                value: fine,
                tri: child,
                depth: node.depth + 1,
            });
        }
    }
}

/// Adaptive Simpson integration on an interval with a conservative error
/// accumulator; used by the Hellinger harness.
pub fn integrate_interval(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_evals: usize,
) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, m: f64, b: f64, evals: &mut usize) -> f64 {
        *evals += 3;
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        evals: &mut usize,
        max_evals: usize,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, 0.5 * (a + m), m, evals);
        let right = simpson(f, m, 0.5 * (m + b), b, evals);
        let err = (left + right - whole).abs();
        if err <= 15.0 * tol || depth >= 48 {
            if *evals > max_evals && err > 15.0 * tol {
                return Err(Error::ToleranceNotMet {
                    requested: tol,
                    achieved: err,
                });
            }
            return Ok(left + right + (left + right - whole) / 15.0);
        }
        Ok(recurse(f, a, m, left, tol / 2.0, evals, max_evals, depth + 1)?
            + recurse(f, m, b, right, tol / 2.0, evals, max_evals, depth + 1)?)
    }
    let mut evals = 0usize;
    let whole = simpson(f, a, 0.5 * (a + b), b, &mut evals);
    recurse(f, a, b, whole, tol, &mut evals, max_evals, 0)
}

/// Result of an exhaustive grid search for the maximum-likelihood heights.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub y_star: Vec<f64>,
    pub loglik: f64,
}

/// Exhaustive maximum-likelihood search over the mean-zero height grid
/// `{y : 1'y = 0, |y_i| <= grid_radius, step grid_step}`, scoring the true
/// log-likelihood `sum_i h(X_i) - n A(y)` with exact partition values.
///
/// Exponential in `n - 1`; intended for `n <= 5` and dimension at most two.
pub fn brute_force_mle(
    xset: &SampleSet,
    grid_radius: f64,
    grid_step: f64,
) -> Result<BruteForceResult> {
    let n = xset.n();
    if n > 5 {
        return Err(Error::InvalidParams(format!(
            "grid search is exponential in n; n = {n} exceeds 5"
        )));
    }
    if xset.d() > 2 {
        return Err(Error::InvalidParams("grid search supports dimension at most 2".into()));
    }
    if !(grid_radius > 0.0) || !(grid_step > 0.0) {
        return Err(Error::InvalidParams("grid radius and step must be positive".into()));
    }

    let half = (grid_radius / grid_step).round() as i64;
    let mut best_y: Option<Vec<f64>> = None;
    let mut best_score = f64::NEG_INFINITY;

    // Odometer over the first n-1 coordinates; the last is forced by the
    // mean-zero constraint and stays on the grid automatically.
    let mut idx = vec![-half; n - 1];
    let mut y = vec![0.0; n];
    let d1 = xset.d() == 1;
    let xs: Vec<f64> = if d1 {
        xset.points().iter().map(|p| p[0]).collect()
    } else {
        Vec::new()
    };

    loop {
        let mut sum = 0i64;
        for (k, &i) in idx.iter().enumerate() {
            y[k] = i as f64 * grid_step;
            sum += i;
        }
        let last = -sum;
        if last.abs() <= half {
            y[n - 1] = last as f64 * grid_step;
            let score = if d1 {
                score_1d(&xs, &y)
            } else {
                score_2d(xset, &y)?
            };
            if score > best_score {
                best_score = score;
                best_y = Some(y.clone());
            }
        }

        // Advance the odometer.
        let mut k = 0;
        loop {
            if k == idx.len() {
                let y_star = best_y.ok_or_else(|| {
                    Error::InvalidParams("empty grid: radius smaller than step".into())
                })?;
                return Ok(BruteForceResult {
                    y_star,
                    loglik: best_score,
                });
            }
            idx[k] += 1;
            if idx[k] <= half {
                break;
            }
            idx[k] = -half;
            k += 1;
        }
    }
}

/// True log-likelihood of heights `y` on a one-dimensional instance.
fn score_1d(xs: &[f64], y: &[f64]) -> f64 {
    let Ok(env) = PiecewiseLinearLogDensity1D::upper_envelope(xs, y) else {
        return f64::NEG_INFINITY;
    };
    let a = env.log_partition();
    let mut sum = 0.0;
    for &x in xs {
        sum += env.value(x).expect("sample points lie in the support");
    }
    sum - xs.len() as f64 * a
}

fn score_2d(xset: &SampleSet, y: &[f64]) -> Result<f64> {
    let a = exact_partition_2d(xset, y, 1e-6)?;
    let mut sum = 0.0;
    for i in 0..xset.n() {
        match tent_evaluate(xset, y, xset.point(i))? {
            crate::lp_core::TentValue::Value(h) => sum += h,
            crate::lp_core::TentValue::OutsideHull => {
                return Err(Error::NumericalFailure("sample point outside its own hull".into()))
            }
        }
    }
    Ok(sum - xset.n() as f64 * a)
}

/// Central finite differences of the one-dimensional log-partition
/// function, projected onto the mean-zero tangent `{1'v = 0}`.
///
/// Errors with `NeighborhoodCrossing` when a perturbation changes the set
/// of envelope-supporting points, since the derivative then jumps.
pub fn finite_difference_grad_a(xset: &SampleSet, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let xs = one_dimensional(xset)?;
    if y.len() != xs.len() {
        return Err(Error::InvalidParams("height count mismatch".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParams("step must be positive".into()));
    }
    let base_sources = PiecewiseLinearLogDensity1D::upper_envelope(&xs, y)?
        .sources()
        .to_vec();
    let mut grad = vec![0.0; y.len()];
    let mut pert = y.to_vec();
    for i in 0..y.len() {
        let mut vals = [0.0f64; 2];
        for (s, sign) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
            pert[i] = y[i] + sign * h;
            let env = PiecewiseLinearLogDensity1D::upper_envelope(&xs, &pert)?;
            if env.sources() != base_sources {
                pert[i] = y[i];
                return Err(Error::NeighborhoodCrossing(i));
            }
            vals[s] = env.log_partition();
        }
        pert[i] = y[i];
        grad[i] = (vals[0] - vals[1]) / (2.0 * h);
    }
    let mean = grad.iter().sum::<f64>() / grad.len() as f64;
    for g in &mut grad {
        *g -= mean;
    }
    Ok(grad)
}

/// Integration domain for [`hellinger_squared`].
pub enum Domain {
    Interval(f64, f64),
    Polygon(Vec<[f64; 2]>),
}

/// Squared Hellinger distance `1/2 \int (sqrt f - sqrt g)^2` between two
/// densities evaluated pointwise, integrated over `domain`, which must
/// cover both supports.
pub fn hellinger_squared(
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    domain: &Domain,
    tol: f64,
) -> Result<f64> {
    let integrand = move |p: &[f64]| -> f64 {
        let a = f(p).max(0.0).sqrt();
        let b = g(p).max(0.0).sqrt();
        0.5 * (a - b) * (a - b)
    };
    match domain {
        Domain::Interval(a, b) => {
            integrate_interval(&|t| integrand(&[t]), *a, *b, tol, 2_000_000)
        }
        Domain::Polygon(vertices) => {
            let mut tris: Vec<[[f64; 2]; 3]> = Vec::new();
            for i in 1..vertices.len() - 1 {
                tris.push([vertices[0], vertices[i], vertices[i + 1]]);
            }
            // Absolute tolerance scaled by the fact that the integrand is
            // bounded by the larger density; callers pass generous tols.
            integrate_triangles(&tris, &integrand, tol, 2_000_000)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set1d(xs: &[f64]) -> SampleSet {
        SampleSet::new(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    const LN_HALF_E_MINUS_INV_E: f64 = 0.16143936157119537; // ln((e - 1/e)/2)

    #[test]
    fn envelope_drops_interior_poles() {
        // The middle pole sits strictly below the chord.
        let env =
            PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 0.5, 1.0], &[0.0, -1.0, 0.0])
                .unwrap();
        assert_eq!(env.knots().len(), 2);
        assert_eq!(env.sources(), &[0, 2]);
        assert!((env.value(0.5).unwrap() - 0.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_keeps_concave_poles() {
        let env =
            PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0])
                .unwrap();
        assert_eq!(env.knots().len(), 3);
        assert!((env.value(0.25).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partition_uniform_is_zero() {
        let xs = set1d(&[0.0, 1.0]);
        assert!(exact_partition_1d(&xs, &[0.0, 0.0]).unwrap().abs() < 1e-14);
    }

    #[test]
    fn partition_linear_segment_closed_form() {
        let xs = set1d(&[0.0, 1.0]);
        let a = exact_partition_1d(&xs, &[1.0, -1.0]).unwrap();
        assert!((a - LN_HALF_E_MINUS_INV_E).abs() < 1e-13);
    }

    #[test]
    fn partition_cross_validated_against_quadrature() {
        let xs = set1d(&[0.0, 0.5, 1.0]);
        let y = [0.2, 0.7, -0.9];
        let a = exact_partition_1d(&xs, &y).unwrap();
        let env = PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 0.5, 1.0], &y).unwrap();
        let quad = integrate_interval(
            &|t| env.value(t).map(f64::exp).unwrap_or(0.0),
            0.0,
            1.0,
            1e-12,
            1_000_000,
        )
        .unwrap();
        assert!((a - quad.ln()).abs() < 1e-10);
    }

    #[test]
    fn cdf_and_inverse_agree() {
        let env =
            PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 1.0], &[1.0, -1.0]).unwrap();
        // Closed-form CDF of exp(1 - 2x) on [0, 1].
        let exact = |t: f64| ((1f64).exp() - (1.0 - 2.0 * t).exp()) / ((1f64).exp() - (-1f64).exp());
        for t in [0.1, 0.3, 0.5, 0.9] {
            assert!((env.cdf(t) - exact(t)).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40_000usize;
        let mut count_below_half = 0usize;
        for _ in 0..n {
            if env.sample_exact(&mut rng) <= 0.5 {
                count_below_half += 1;
            }
        }
        let frac = count_below_half as f64 / n as f64;
        let p = exact(0.5);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((frac - p).abs() < 4.0 * se, "frac {frac}, expected {p}");
    }

    #[test]
    fn quadrature_triangle_and_square() {
        let tri = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let one = |_: &[f64]| 1.0;
        let v = integrate_over_hull_2d(&tri, &one, 1e-8, 100_000).unwrap();
        assert!((v - 0.5).abs() < 1e-8);

        let sq = SampleSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let v = integrate_over_hull_2d(&sq, &one, 1e-8, 100_000).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn partition_2d_uniform_cases() {
        let tri = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = exact_partition_2d(&tri, &[0.0, 0.0, 0.0], 1e-7).unwrap();
        assert!((a - 0.5f64.ln()).abs() < 1e-6);

        let sq = SampleSet::new(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let a = exact_partition_2d(&sq, &[0.0; 4], 1e-7).unwrap();
        assert!(a.abs() < 1e-6);
    }

    #[test]
    fn partition_2d_matches_symmetry_reduction() {
        // On the triangle with apex height t at (0,0) and -t/2 at the others,
        // the tent depends only on barycentric weight of the apex; reducing
        // to that coordinate gives the integral
        //   \int_tri exp(h) = 2 * area * \int_0^1 (1-s) exp(t s - t(1-s)/2) ds
        // with area 1/2. Evaluate by one-dimensional quadrature.
        let tri = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let t = 0.8;
        let y = [t, -t / 2.0, -t / 2.0];
        let a = exact_partition_2d(&tri, &y, 1e-8).unwrap();
        let g = |s: f64| (1.0 - s) * (t * s - t * (1.0 - s) / 2.0).exp();
        let reduced = integrate_interval(&g, 0.0, 1.0, 1e-12, 1_000_000).unwrap();
        assert!((a - reduced.ln()).abs() < 1e-6, "a = {a}, reduced = {}", reduced.ln());
    }

    #[test]
    fn brute_force_two_points_is_uniform() {
        let xs = set1d(&[0.0, 1.0]);
        let r = brute_force_mle(&xs, 2.0, 0.1).unwrap();
        assert!(r.y_star.iter().all(|v| v.abs() < 1e-12), "{:?}", r.y_star);
        assert!(r.loglik.abs() < 1e-12);
    }

    #[test]
    fn brute_force_relabeling_invariance() {
        let a = brute_force_mle(&set1d(&[0.0, 0.3, 1.0]), 1.0, 0.25).unwrap();
        let b = brute_force_mle(&set1d(&[1.0, 0.0, 0.3]), 1.0, 0.25).unwrap();
        assert!((a.loglik - b.loglik).abs() < 1e-12);
    }

    #[test]
    fn brute_force_beats_uniform() {
        // The maximum-likelihood score weakly dominates the uniform density
        // on the hull, which is the grid point y = 0.
        let xs = set1d(&[0.0, 0.1, 0.4, 1.0]);
        let r = brute_force_mle(&xs, 2.0, 0.25).unwrap();
        let uniform = score_1d(&[0.0, 0.1, 0.4, 1.0], &[0.0; 4]);
        assert!(r.loglik >= uniform - 1e-12);
    }

    #[test]
    fn grid_refinement_consistency() {
        let xs = set1d(&[0.0, 0.25, 1.0]);
        let coarse = brute_force_mle(&xs, 1.5, 0.5).unwrap();
        let fine = brute_force_mle(&xs, 1.5, 0.25).unwrap();
        assert!(fine.loglik >= coarse.loglik - 1e-12);
        // Lipschitz bound: halving the step moves the optimum by at most a
        // constant times the step.
        assert!(fine.loglik - coarse.loglik <= 3.0 * 3.0 * 0.5);
    }

    #[test]
    fn fd_gradient_symmetric_case() {
        let xs = set1d(&[0.0, 1.0]);
        let g = finite_difference_grad_a(&xs, &[0.0, 0.0], 1e-5).unwrap();
        // Raw gradient is (1/2, 1/2); projection removes it entirely.
        assert!(g.iter().all(|v| v.abs() < 1e-9), "{g:?}");
    }

    #[test]
    fn fd_gradient_matches_exact_sampling_mean() {
        // E[T] under the tent density equals grad A; check the projected
        // version against exact inverse-CDF draws mapped to segment weights.
        let xs = set1d(&[0.0, 1.0]);
        let y = [1.0, -1.0];
        let g = finite_difference_grad_a(&xs, &y, 1e-6).unwrap();
        let env = PiecewiseLinearLogDensity1D::upper_envelope(&[0.0, 1.0], &y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000usize;
        let mut mean_t0 = 0.0;
        for _ in 0..n {
            let s = env.sample_exact(&mut rng);
            mean_t0 += 1.0 - s; // weight on the pole at 0 along the segment
        }
        mean_t0 /= n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!(
            ((mean_t0 - 0.5) - g[0]).abs() < 4.0 * se + 1e-6,
            "mean-centered weight {}, fd {}",
            mean_t0 - 0.5,
            g[0]
        );
    }

    #[test]
    fn fd_gradient_richardson_consistency() {
        let xs = set1d(&[0.0, 0.4, 1.0]);
        let y = [0.3, 0.5, -0.8];
        let g1 = finite_difference_grad_a(&xs, &y, 1e-3).unwrap();
        let g2 = finite_difference_grad_a(&xs, &y, 5e-4).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn fd_gradient_detects_envelope_change() {
        // The middle pole sits exactly on the chord; nudging it up changes
        // the knot set, so the oracle must refuse.
        let xs = set1d(&[0.0, 0.5, 1.0]);
        let r = finite_difference_grad_a(&xs, &[0.0, 0.0, 0.0], 1e-4);
        assert!(matches!(r, Err(Error::NeighborhoodCrossing(_))));
    }

    #[test]
    fn hellinger_identical_and_shifted_uniforms() {
        let u1 = |p: &[f64]| if (0.0..=1.0).contains(&p[0]) { 1.0 } else { 0.0 };
        let u2 = |p: &[f64]| if (0.0..=2.0).contains(&p[0]) { 0.5 } else { 0.0 };
        let same = hellinger_squared(&u1, &u1, &Domain::Interval(-0.5, 1.5), 1e-10).unwrap();
        assert!(same.abs() < 1e-10);
        let diff = hellinger_squared(&u1, &u2, &Domain::Interval(-0.5, 2.5), 1e-10).unwrap();
        let expect = 1.0 - 1.0 / 2.0f64.sqrt();
        assert!((diff - expect).abs() < 1e-6, "got {diff}, want {expect}");
    }
}
