//! Linear-programming substrate for tent functions.
//!
//! A tent function is the smallest concave function on the convex hull of
//! the sample points that majorizes the lifted points `(X_i, y_i)`. Its
//! value at a query point is the optimum of a small LP over the convex
//! multipliers expressing the query as a hull combination, and the optimal
//! multipliers themselves are the polyhedral sufficient statistic. The
//! dual of that LP, an affine majorant of the lifted points minimized at
//! the query, yields a separation oracle for superlevel sets.
//!
//! Everything here is a pure function of its inputs.

mod simplex;

pub use simplex::solve_lp;

use crate::error::{Error, Result};

/// Optimization direction for [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Row relation for [`Constraint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOp {
    Le,
    Eq,
    Ge,
}

/// One linear constraint over implicitly nonnegative variables.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub op: ConstraintOp,
    pub rhs: f64,
}

/// A linear program over nonnegative variables. Free variables must be
/// split into differences of nonnegative pairs by the caller.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        LpProblem {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, op: ConstraintOp, rhs: f64) {
        self.constraints.push(Constraint { coeffs, op, rhs });
    }
}

/// Termination status of an LP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solution of an LP solve.
///
/// On `Optimal` the primal feasibility and complementary-slackness
/// residuals have been verified against the feasibility tolerance. On
/// `Unbounded`, `x` is a feasible point and `ray` an improving direction.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub dual: Vec<f64>,
    pub objective: f64,
    /// True when a nonbasic column prices to zero, i.e. the optimal vertex
    /// is not unique.
    pub alternate_optima: bool,
    pub ray: Option<Vec<f64>>,
}

/// Default feasibility tolerance; every oracle tolerance derives from it.
pub const FEAS_TOL: f64 = 1e-9;

/// The immutable sample matrix: `n` points in `R^d`, affinely spanning.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    n: usize,
    d: usize,
}

impl SampleSet {
    /// Validates and wraps a point list: at least `d + 1` points, all
    /// finite, no duplicates, affinely spanning `R^d`.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidParams("no sample points".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidParams("points have dimension 0".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidParams(format!(
                    "point {i} has dimension {}, expected {d}",
                    p.len()
                )));
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidParams(format!("point {i} has non-finite coordinates")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if points[i] == points[j] {
                    return Err(Error::InvalidParams(format!(
                        "points {i} and {j} are identical"
                    )));
                }
            }
        }
        let rank = affine_rank(&points);
        if n < d + 1 || rank < d {
            return Err(Error::DegenerateSampleSet {
                rank,
                required: d,
                dim: d,
            });
        }
        Ok(SampleSet { points, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for p in &self.points {
            for (ck, pk) in c.iter_mut().zip(p) {
                *ck += pk;
            }
        }
        for ck in &mut c {
            *ck /= self.n as f64;
        }
        c
    }

    /// Axis-aligned bounding box of the points (and hence of the hull).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.points[0].clone();
        let mut hi = self.points[0].clone();
        for p in &self.points[1..] {
            for k in 0..self.d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

/// Rank of the translated point matrix `{X_i - X_0}` by Gaussian
/// elimination with partial pivoting.
fn affine_rank(points: &[Vec<f64>]) -> usize {
    let n = points.len();
    if n <= 1 {
        return 0;
    }
    let d = points[0].len();
    let mut rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale.max(1.0);

    let mut rank = 0;
    for col in 0..d {
        let pivot = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][col]
                .abs()
                .partial_cmp(&rows[b][col].abs())
                .unwrap()
        });
        let Some(pr) = pivot else { break };
        if rows[pr][col].abs() <= tol {
            continue;
        }
        rows.swap(rank, pr);
        for r in (rank + 1)..rows.len() {
            let f = rows[r][col] / rows[rank][col];
            for c in col..d {
                let sub = f * rows[rank][c];
                rows[r][c] -= sub;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Tent value at a point: finite on the hull, a distinguished marker
/// outside it so that downstream `exp()` never sees a floating infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TentValue {
    Value(f64),
    OutsideHull,
}

impl TentValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            TentValue::Value(v) => Some(v),
            TentValue::OutsideHull => None,
        }
    }

    pub fn is_outside(self) -> bool {
        matches!(self, TentValue::OutsideHull)
    }

    /// Collapses to an extended real; only for contexts (comparisons,
    /// plotting) where `-inf` cannot be exponentiated.
    pub fn or_neg_infinity(self) -> f64 {
        match self {
            TentValue::Value(v) => v,
            TentValue::OutsideHull => f64::NEG_INFINITY,
        }
    }
}

fn check_query(xset: &SampleSet, y: &[f64], x: &[f64]) -> Result<()> {
    if y.len() != xset.n() {
        return Err(Error::InvalidParams(format!(
            "height vector has length {}, expected {}",
            y.len(),
            xset.n()
        )));
    }
    if x.len() != xset.d() {
        return Err(Error::InvalidParams(format!(
            "query point has dimension {}, expected {}",
            x.len(),
            xset.d()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParams("non-finite query data".into()));
    }
    Ok(())
}

/// The hull-combination LP shared by tent evaluation and the polyhedral
/// statistic: maximize `y' a` subject to `X a = x`, `1' a = 1`, `a >= 0`.
fn hull_combination_lp(xset: &SampleSet, y: &[f64], x: &[f64]) -> LpProblem {
    let n = xset.n();
    let d = xset.d();
    let mut lp = LpProblem::new(Sense::Maximize, y.to_vec());
    for k in 0..d {
        let coeffs: Vec<f64> = (0..n).map(|i| xset.point(i)[k]).collect();
        lp.push(coeffs, ConstraintOp::Eq, x[k]);
    }
    lp.push(vec![1.0; n], ConstraintOp::Eq, 1.0);
    lp
}

/// Evaluates the tent function at `x`: the largest height `z` such that
/// `(x, z)` lies in the convex hull of the lifted points `(X_i, y_i)`.
///
/// Heights need not be normalized; the value is shift-covariant in `y`.
pub fn tent_evaluate(xset: &SampleSet, y: &[f64], x: &[f64]) -> Result<TentValue> {
    check_query(xset, y, x)?;
    let lp = hull_combination_lp(xset, y, x);
    let sol = solve_lp(&lp, FEAS_TOL)?;
    match sol.status {
        LpStatus::Optimal => Ok(TentValue::Value(sol.objective)),
        LpStatus::Infeasible => Ok(TentValue::OutsideHull),
        LpStatus::Unbounded => Err(Error::NumericalFailure(
            "hull-combination LP reported unbounded on a compact feasible set".into(),
        )),
    }
}

/// Convex-combination weights expressing `x` over the corners of its cell
/// in the subdivision induced by the tent.
#[derive(Debug, Clone)]
pub struct PolyhedralStatistic {
    /// Weights `T` with `T >= 0`, `sum T = 1`, `X T = x`, `y' T = h(x)`.
    pub weights: Vec<f64>,
    /// True when the optimal vertex is not unique, i.e. `x` lies on a cell
    /// boundary or a non-simplicial cell; any optimal vertex is a valid
    /// statistic there.
    pub boundary: bool,
}

/// Computes the polyhedral statistic at `x`; errors with `OutsideHull`
/// when `x` is not in the hull.
pub fn polyhedral_statistic(xset: &SampleSet, y: &[f64], x: &[f64]) -> Result<PolyhedralStatistic> {
    check_query(xset, y, x)?;
    let lp = hull_combination_lp(xset, y, x);
    let sol = solve_lp(&lp, FEAS_TOL)?;
    match sol.status {
        LpStatus::Infeasible => Err(Error::OutsideHull),
        LpStatus::Unbounded => Err(Error::NumericalFailure(
            "hull-combination LP reported unbounded on a compact feasible set".into(),
        )),
        LpStatus::Optimal => {
            let mut weights = sol.x;
            for w in &mut weights {
                if *w < 0.0 {
                    if *w < -1e-8 {
                        return Err(Error::NumericalFailure(format!(
                            "statistic weight {w:.3e} below zero"
                        )));
                    }
                    *w = 0.0;
                }
            }
            Ok(PolyhedralStatistic {
                weights,
                boundary: sol.alternate_optima,
            })
        }
    }
}

/// True iff `exp(h(x)) >= level`, i.e. `x` lies in the closed superlevel
/// set of the tent density numerator at `level`.
pub fn membership_oracle(xset: &SampleSet, y: &[f64], level: f64, x: &[f64]) -> Result<bool> {
    if !(level > 0.0) {
        return Err(Error::InvalidParams(format!("level must be positive, got {level}")));
    }
    match tent_evaluate(xset, y, x)? {
        TentValue::OutsideHull => Ok(false),
        TentValue::Value(h) => Ok(h >= level.ln()),
    }
}

/// Which side of a [`Hyperplane`] is kept (contains the target set).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Kept side is `normal . z >= offset`.
    Above,
    /// Kept side is `normal . z <= offset`.
    Below,
}

/// An oriented hyperplane `normal . z = offset` with a kept side.
#[derive(Debug, Clone)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub sense: Side,
}

impl Hyperplane {
    fn new(normal: Vec<f64>, offset: f64, sense: Side) -> Result<Self> {
        let norm = normal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(norm > 0.0) {
            return Err(Error::NumericalFailure("separating hyperplane has zero normal".into()));
        }
        Ok(Hyperplane {
            normal,
            offset,
            sense,
        })
    }

    /// Signed margin of `z` toward the kept side; positive means kept.
    pub fn margin(&self, z: &[f64]) -> f64 {
        let dot: f64 = self.normal.iter().zip(z).map(|(a, b)| a * b).sum();
        match self.sense {
            Side::Above => dot - self.offset,
            Side::Below => self.offset - dot,
        }
    }

    pub fn keeps(&self, z: &[f64]) -> bool {
        self.margin(z) >= 0.0
    }
}

/// Outcome of a separation query against a superlevel set.
#[derive(Debug, Clone)]
pub enum Separation {
    Inside,
    Separated(Hyperplane),
}

/// Affine-majorant LP: minimize `b0 + b . x` over `(b0, b)` subject to
/// `b0 + b . X_i >= y_i` for all `i`. Free variables are split.
fn affine_majorant_lp(xset: &SampleSet, y: &[f64], x: &[f64]) -> LpProblem {
    let n = xset.n();
    let d = xset.d();
    // Variables: (p0, q0, p_1..p_d, q_1..q_d) with b0 = p0 - q0, b_k = p_k - q_k.
    let nv = 2 * (d + 1);
    let mut objective = vec![0.0; nv];
    objective[0] = 1.0;
    objective[1] = -1.0;
    for k in 0..d {
        objective[2 + 2 * k] = x[k];
        objective[2 + 2 * k + 1] = -x[k];
    }
    let mut lp = LpProblem::new(Sense::Minimize, objective);
    for i in 0..n {
        let mut coeffs = vec![0.0; nv];
        coeffs[0] = 1.0;
        coeffs[1] = -1.0;
        for k in 0..d {
            coeffs[2 + 2 * k] = xset.point(i)[k];
            coeffs[2 + 2 * k + 1] = -xset.point(i)[k];
        }
        lp.push(coeffs, ConstraintOp::Ge, y[i]);
    }
    lp
}

fn recombine_free(v: &[f64], d: usize) -> (f64, Vec<f64>) {
    let b0 = v[0] - v[1];
    let b: Vec<f64> = (0..d).map(|k| v[2 + 2 * k] - v[2 + 2 * k + 1]).collect();
    (b0, b)
}

/// Separation oracle for the superlevel set `{z : exp(h(z)) >= level}`.
///
/// Returns `Inside` when the query belongs to the set; otherwise a
/// hyperplane placed halfway between the level and the best affine
/// majorant's value at the query, so the query sits strictly on the
/// excluded side and the whole superlevel set on the kept side.
pub fn separation_oracle(
    xset: &SampleSet,
    y: &[f64],
    level: f64,
    x: &[f64],
) -> Result<Separation> {
    if !(level > 0.0) {
        return Err(Error::InvalidParams(format!("level must be positive, got {level}")));
    }
    check_query(xset, y, x)?;
    let ln_level = level.ln();
    let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // The tent's maximum over the hull is attained at its highest pole, so
    // a level above exp(y_max) has an empty superlevel set.
    if ln_level > y_max + 1e-12 * (1.0 + y_max.abs()) {
        return Err(Error::DegenerateLevel {
            level,
            max: y_max.exp(),
        });
    }

    let d = xset.d();
    let lp = affine_majorant_lp(xset, y, x);
    let sol = solve_lp(&lp, FEAS_TOL)?;

    let (b0, b, value_at_x) = match sol.status {
        LpStatus::Infeasible => {
            return Err(Error::NumericalFailure(
                "affine-majorant LP reported infeasible; it always admits a large constant".into(),
            ));
        }
        LpStatus::Optimal => {
            let tol = FEAS_TOL * 100.0 * (1.0 + ln_level.abs());
            if sol.objective >= ln_level - tol {
                // By duality the optimum equals h(x) on the hull, so the
                // query meets the level.
                return Ok(Separation::Inside);
            }
            let (b0, b) = recombine_free(&sol.x, d);
            (b0, b, sol.objective)
        }
        LpStatus::Unbounded => {
            // The query is outside the hull: majorants can dip arbitrarily
            // low at `x`. Walk a feasible majorant along the improving ray
            // until its value at `x` sits one unit below the level.
            let (f0, f) = recombine_free(&sol.x, d);
            let ray = sol.ray.as_ref().ok_or_else(|| {
                Error::NumericalFailure("unbounded LP without a ray".into())
            })?;
            let (r0, r) = recombine_free(ray, d);
            let dir: f64 = r0 + r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            if !(dir < 0.0) {
                return Err(Error::NumericalFailure(
                    "unbounded ray does not improve the majorant at the query".into(),
                ));
            }
            let value_f: f64 = f0 + f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let t = ((value_f - (ln_level - 1.0)) / -dir).max(1.0);
            let b0 = f0 + t * r0;
            let b: Vec<f64> = f.iter().zip(&r).map(|(a, r)| a + t * r).collect();
            let value: f64 = b0 + b.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            (b0, b, value)
        }
    };

    // Majorant property: b0 + b . z >= h(z) for all z in the hull, hence the
    // superlevel set lies in {b0 + b . z >= ln level}. Place the cut halfway
    // into the certified gap.
    let gap = ln_level - value_at_x;
    debug_assert!(gap > 0.0);
    let offset = ln_level - 0.5 * gap - b0;
    Ok(Separation::Separated(Hyperplane::new(b, offset, Side::Above)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set1d(xs: &[f64]) -> SampleSet {
        SampleSet::new(xs.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![vec![0.0], vec![1.0]]).is_ok());
        // Too few points to span.
        assert!(matches!(
            SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]),
            Err(Error::DegenerateSampleSet { .. })
        ));
        // Collinear points in the plane do not span.
        let e = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]);
        match e {
            Err(Error::DegenerateSampleSet { rank, required, .. }) => {
                assert_eq!(rank, 1);
                assert_eq!(required, 2);
            }
            other => panic!("expected degenerate sample set, got {other:?}"),
        }
        // Duplicates rejected.
        assert!(SampleSet::new(vec![vec![0.0], vec![0.0], vec![1.0]]).is_err());
    }

    #[test]
    fn zero_tent_is_zero_on_hull() {
        let xs = set1d(&[0.0, 1.0]);
        let v = tent_evaluate(&xs, &[0.0, 0.0], &[0.5]).unwrap();
        assert!((v.finite().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn segment_interpolation() {
        let xs = set1d(&[0.0, 1.0]);
        let v = tent_evaluate(&xs, &[1.0, -1.0], &[0.25]).unwrap();
        assert!((v.finite().unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn outside_hull_detected() {
        let xs = set1d(&[0.0, 1.0]);
        let v = tent_evaluate(&xs, &[0.0, 0.0], &[2.0]).unwrap();
        assert!(v.is_outside());
    }

    #[test]
    fn triangle_barycentric_value() {
        let xs = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // Heights rescaled to sum zero: (3, -1, -2) is already mean-zero.
        let y = [3.0, -1.0, -2.0];
        let q = [0.2, 0.3];
        // Unique barycentric coordinates on a triangle: a = (1 - u - v, u, v).
        let expect = (1.0 - 0.2 - 0.3) * y[0] + 0.2 * y[1] + 0.3 * y[2];
        let v = tent_evaluate(&xs, &y, &q).unwrap().finite().unwrap();
        assert!((v - expect).abs() < 1e-10);
    }

    #[test]
    fn statistic_contract_on_segment() {
        let xs = set1d(&[0.0, 1.0]);
        let t = polyhedral_statistic(&xs, &[0.3, -0.3], &[0.25]).unwrap();
        assert!((t.weights[0] - 0.75).abs() < 1e-10);
        assert!((t.weights[1] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn statistic_centroid_of_triangle() {
        let xs = SampleSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let y = [0.5, -0.2, -0.3];
        let q = [1.0 / 3.0, 1.0 / 3.0];
        let t = polyhedral_statistic(&xs, &y, &q).unwrap();
        for w in &t.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-9, "weights {:?}", t.weights);
        }
    }

    #[test]
    fn statistic_flags_flat_degenerate_instance() {
        // Three collinear poles with equal heights: the middle pole is an
        // alternate optimum everywhere, so the boundary flag must be set.
        let xs = set1d(&[0.0, 0.5, 1.0]);
        let t = polyhedral_statistic(&xs, &[0.0, 0.0, 0.0], &[0.25]).unwrap();
        let combo: f64 = t.weights.iter().zip([0.0, 0.5, 1.0]).map(|(w, x)| w * x).sum();
        let total: f64 = t.weights.iter().sum();
        assert!((combo - 0.25).abs() < 1e-9);
        assert!((total - 1.0).abs() < 1e-9);
        assert!(t.boundary);
    }

    #[test]
    fn statistic_outside_hull_errors() {
        let xs = set1d(&[0.0, 1.0]);
        assert!(matches!(
            polyhedral_statistic(&xs, &[0.0, 0.0], &[2.0]),
            Err(Error::OutsideHull)
        ));
    }

    #[test]
    fn membership_basics() {
        let xs = set1d(&[0.0, 1.0]);
        let y0 = [0.0, 0.0];
        assert!(membership_oracle(&xs, &y0, 0.5, &[0.5]).unwrap());
        assert!(!membership_oracle(&xs, &y0, 0.5, &[2.0]).unwrap());
        // Closed-form tent h(x) = 1 - 2x: at x = 0.75, exp(-0.5) < 1.
        let y = [1.0, -1.0];
        assert!(!membership_oracle(&xs, &y, 1.0, &[0.75]).unwrap());
        assert!(membership_oracle(&xs, &y, 1.0, &[0.25]).unwrap());
    }

    #[test]
    fn separation_one_dimensional() {
        let xs = set1d(&[0.0, 1.0]);
        let sep = separation_oracle(&xs, &[0.0, 0.0], 0.5, &[2.0]).unwrap();
        match sep {
            Separation::Separated(h) => {
                // Everything in [0, 1] is kept, the query is excluded.
                assert!(h.keeps(&[0.0]));
                assert!(h.keeps(&[1.0]));
                assert!(h.margin(&[2.0]) < 0.0);
            }
            Separation::Inside => panic!("query is outside the hull"),
        }
    }

    #[test]
    fn separation_inside() {
        let xs = set1d(&[0.0, 1.0]);
        let sep = separation_oracle(&xs, &[0.0, 0.0], 0.5, &[0.5]).unwrap();
        assert!(matches!(sep, Separation::Inside));
    }

    #[test]
    fn separation_respects_true_superlevel_set() {
        // h(x) = 1 - 2x on [0, 1]; the superlevel set at level 1 is [0, 0.5].
        let xs = set1d(&[0.0, 1.0]);
        let sep = separation_oracle(&xs, &[1.0, -1.0], 1.0, &[0.9]).unwrap();
        match sep {
            Separation::Separated(h) => {
                for t in [0.0, 0.1, 0.25, 0.4, 0.5] {
                    assert!(h.keeps(&[t]), "lost superlevel point {t}");
                }
                assert!(h.margin(&[0.9]) < 0.0);
            }
            Separation::Inside => panic!("0.9 is below the level"),
        }
    }

    #[test]
    fn separation_degenerate_level() {
        let xs = set1d(&[0.0, 1.0]);
        let r = separation_oracle(&xs, &[1.0, -1.0], 10.0, &[0.5]);
        assert!(matches!(r, Err(Error::DegenerateLevel { .. })));
    }

    #[test]
    fn tent_majorizes_poles() {
        let xs = set1d(&[0.0, 0.3, 0.7, 1.0]);
        let y = [0.5, -1.2, 0.4, 0.3];
        for i in 0..4 {
            let h = tent_evaluate(&xs, &y, xs.point(i)).unwrap().finite().unwrap();
            assert!(h >= y[i] - 1e-9, "pole {i}: h = {h}, y = {}", y[i]);
        }
    }

    #[test]
    fn shift_covariance() {
        let xs = set1d(&[0.0, 0.4, 1.0]);
        let y = [0.2, 0.9, -0.6];
        let shifted: Vec<f64> = y.iter().map(|v| v + 2.5).collect();
        let q = [0.37];
        let a = tent_evaluate(&xs, &y, &q).unwrap().finite().unwrap();
        let b = tent_evaluate(&xs, &shifted, &q).unwrap().finite().unwrap();
        assert!((b - (a + 2.5)).abs() < 1e-9);
    }
}
