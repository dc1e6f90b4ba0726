//! Volume estimation backends.
//!
//! Grid backend (dimension <= 3): exhaustive cell counting with a rigorous
//! under-count (cells whose corners all lie in the body, valid by
//! convexity) and an over-count from exact per-cell LP intersection tests
//! when the body supports them, else a corner-dilation heuristic valid for
//! bodies whose inscribed ball spans several cells. The estimate is the
//! geometric mean of the bounds; the certificate is their ratio.
//!
//! Monte Carlo backend: annealing chains of nested convex bodies whose
//! consecutive volume ratios are at least 1/2 by a scaling argument, each
//! ratio estimated by uniform hit-and-run draws in the larger body. Bodies
//! with a known inscribed ball anchor on the ball volume; tent supports
//! anchor on the exact volume of a fat vertex simplex.

use super::body::{BallIntersection, ConvexBody, TentLevelSet};
use super::walk::hit_and_run;
use super::VolumeEstimate;
use crate::error::{Error, Result};
use crate::lp_core::{SampleSet, TentValue};
use rand::Rng;

/// Natural log of the volume of the `d`-ball of radius `r`, by the
/// two-step recurrence `V_d = V_{d-2} * 2 pi r^2 / d`.
pub(crate) fn log_ball_volume(d: usize, r: f64) -> f64 {
    let mut k = d % 2;
    let mut lv = if k == 0 { 0.0 } else { (2.0 * r).ln() };
    while k < d {
        k += 2;
        lv += (std::f64::consts::TAU * r * r / k as f64).ln();
    }
    lv
}

fn grid_resolution_cap(d: usize) -> usize {
    match d {
        1 => 4096,
        2 => 256,
        _ => 64,
    }
}

/// Calls `f` with every multi-index in `[0, extent)^d`.
fn for_each_index(d: usize, extent: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; d];
    loop {
        f(&idx);
        let mut k = 0;
        loop {
            if k == d {
                return;
            }
            idx[k] += 1;
            if idx[k] < extent {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Grid volume with doubling refinement; returns the best achieved
/// estimate even when it misses `delta`, leaving enforcement to callers.
pub(crate) fn grid_volume(body: &dyn ConvexBody, delta: f64) -> Result<VolumeEstimate> {
    let d = body.dim();
    if d > 3 {
        return Err(Error::VolumeFailure(format!(
            "grid backend supports dimension <= 3, got {d}"
        )));
    }
    let (lo, hi) = body.bounding_box();
    if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
        return Err(Error::VolumeFailure("empty or degenerate bounding box".into()));
    }
    let mut best: Option<VolumeEstimate> = None;
    let mut k = 16usize;
    while k <= grid_resolution_cap(d) {
        let est = grid_pass(body, &lo, &hi, k)?;
        let better = match &best {
            None => true,
            Some(b) => est.rel_err < b.rel_err,
        };
        if better {
            best = Some(est);
        }
        if est.rel_err <= delta {
            break;
        }
        k *= 2;
    }
    Ok(best.expect("at least one grid pass ran"))
}

fn grid_pass(body: &dyn ConvexBody, lo: &[f64], hi: &[f64], k: usize) -> Result<VolumeEstimate> {
    let d = body.dim();
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / k as f64).collect();
    let cell_vol: f64 = widths.iter().product();

    // Corner membership, shared by all cells at this resolution.
    let kp = k + 1;
    let mut corner_in = vec![false; kp.pow(d as u32)];
    let mut err: Option<Error> = None;
    for_each_index(d, kp, |idx| {
        if err.is_some() {
            return;
        }
        let p: Vec<f64> = (0..d).map(|j| lo[j] + widths[j] * idx[j] as f64).collect();
        let flat: usize = idx.iter().rev().fold(0, |acc, &i| acc * kp + i);
        match body.contains(&p) {
            Ok(v) => corner_in[flat] = v,
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }

    let cells = k.pow(d as u32);
    // 0 = no corner inside, 1 = some, 2 = all.
    let mut class = vec![0u8; cells];
    let mut under = 0usize;
    for_each_index(d, k, |idx| {
        let flat: usize = idx.iter().rev().fold(0, |acc, &i| acc * k + i);
        let mut all = true;
        let mut any = false;
        for_each_index(d, 2, |off| {
            let cf: usize = idx
                .iter()
                .zip(off)
                .rev()
                .fold(0, |acc, (&i, &o)| acc * kp + (i + o));
            if corner_in[cf] {
                any = true;
            } else {
                all = false;
            }
        });
        class[flat] = if all { 2 } else { u8::from(any) };
        if all {
            under += 1;
        }
    });

    // Over-count: exact LP test when available, else dilate corner hits by
    // one cell ring (valid when the body spans several cells).
    let mut over = 0usize;
    let mut pending_err: Option<Error> = None;
    for_each_index(d, k, |idx| {
        if pending_err.is_some() {
            return;
        }
        let flat: usize = idx.iter().rev().fold(0, |acc, &i| acc * k + i);
        if class[flat] > 0 {
            over += 1;
            return;
        }
        let clo: Vec<f64> = (0..d).map(|j| lo[j] + widths[j] * idx[j] as f64).collect();
        let chi: Vec<f64> = (0..d).map(|j| lo[j] + widths[j] * (idx[j] + 1) as f64).collect();
        match body.box_intersects(&clo, &chi) {
            Some(Ok(true)) => over += 1,
            Some(Ok(false)) => {}
            Some(Err(e)) => pending_err = Some(e),
            None => {
                // Heuristic ring: count the cell if any Chebyshev neighbor
                // holds a corner of the body.
                let mut near = false;
                for_each_index(d, 3, |off| {
                    if near {
                        return;
                    }
                    let mut ok = true;
                    let mut nf = 0usize;
                    for j in (0..d).rev() {
                        let v = idx[j] as isize + off[j] as isize - 1;
                        if v < 0 || v >= k as isize {
                            ok = false;
                            break;
                        }
                        nf = nf * k + v as usize;
                    }
                    if ok && class[nf] > 0 {
                        near = true;
                    }
                });
                if near {
                    over += 1;
                }
            }
        }
    });
    if let Some(e) = pending_err {
        return Err(e);
    }

    if over == 0 {
        return Ok(VolumeEstimate {
            value: 0.0,
            rel_err: 0.0,
        });
    }
    if under == 0 {
        return Ok(VolumeEstimate {
            value: 0.5 * over as f64 * cell_vol,
            rel_err: f64::INFINITY,
        });
    }
    let under_v = under as f64 * cell_vol;
    let over_v = over as f64 * cell_vol;
    Ok(VolumeEstimate {
        value: (under_v * over_v).sqrt(),
        rel_err: (over_v / under_v).sqrt() - 1.0,
    })
}

/// Draws needed per annealing phase so the telescoped product lands within
/// relative error `delta` with probability about `1 - tau`; calibrated so
/// that one phase at the default failure probability costs `9/delta^2`.
fn phase_draws(phases: usize, delta: f64, tau: f64) -> usize {
    let j = phases.max(1) as f64;
    (9.0 * j * (2.0 * j / tau).ln() / ((40.0f64).ln() * delta * delta)).ceil() as usize
}

/// Ball-anchored annealing: grow a ball from a known inscribed ball until
/// it swallows the body; consecutive ball-intersection volumes differ by a
/// factor of at most 2 when the radius grows by 2^(1/d).
pub(crate) fn mc_volume_ball_anchored<R: Rng>(
    body: &dyn ConvexBody,
    delta: f64,
    tau: f64,
    walk_steps: usize,
    rng: &mut R,
) -> Result<VolumeEstimate> {
    let d = body.dim();
    let (c, r) = body.inscribed_ball().ok_or_else(|| {
        Error::VolumeFailure(
            "the Monte Carlo backend needs a known inscribed ball for this body".into(),
        )
    })?;
    let (bc, br) = body.bounding_ball();
    let reach = br
        + c.iter()
            .zip(&bc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    if reach <= r * (1.0 + 1e-12) {
        return Ok(VolumeEstimate {
            value: log_ball_volume(d, r).exp(),
            rel_err: 0.0,
        });
    }
    let phases = (d as f64 * (reach / r).log2()).ceil() as usize;
    let draws = phase_draws(phases, delta, tau);
    let mut log_vol = log_ball_volume(d, r);
    let mut prev_r = r;
    for j in 1..=phases {
        let rj = (r * (j as f64 / d as f64).exp2()).min(reach);
        let phase = BallIntersection {
            body,
            center: c.clone(),
            radius: rj,
        };
        let mut hits = 0usize;
        for _ in 0..draws {
            let z = hit_and_run(&phase, &c, walk_steps, rng)?;
            let dist2: f64 = z.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist2 <= prev_r * prev_r {
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::VolumeFailure(format!(
                "annealing phase {j}/{phases} never saw its inner ball"
            )));
        }
        log_vol += (draws as f64).ln() - (hits as f64).ln();
        prev_r = rj;
    }
    Ok(VolumeEstimate {
        value: log_vol.exp(),
        rel_err: delta,
    })
}

/// Gauss–Jordan inverse with partial pivoting; also returns |det|.
fn invert(mut a: Vec<Vec<f64>>) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    let mut det = 1.0f64;
    for col in 0..n {
        let (pivot, mag) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if mag < 1e-12 {
            return Err(Error::NumericalFailure("singular simplex basis".into()));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        det *= p;
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    Ok((inv, det.abs()))
}

/// Greedy fat simplex: repeatedly take the sample point with the largest
/// orthogonal residual against the affine span built so far.
fn greedy_simplex(xset: &SampleSet) -> Result<Vec<usize>> {
    let n = xset.n();
    let d = xset.d();
    let g = xset.centroid();
    let dist2 = |i: usize| -> f64 {
        xset.point(i)
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    };
    let v0 = (0..n)
        .max_by(|&a, &b| dist2(a).partial_cmp(&dist2(b)).unwrap())
        .unwrap();
    let mut chosen = vec![v0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() < d + 1 {
        let residual = |i: usize| -> f64 {
            let mut v: Vec<f64> = xset
                .point(i)
                .iter()
                .zip(xset.point(v0))
                .map(|(a, b)| a - b)
                .collect();
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vj, qj) in v.iter_mut().zip(q) {
                    *vj -= dot * qj;
                }
            }
            v.iter().map(|x| x * x).sum()
        };
        let pick = (0..n)
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| residual(a).partial_cmp(&residual(b)).unwrap())
            .ok_or_else(|| Error::NumericalFailure("ran out of simplex candidates".into()))?;
        let r2 = residual(pick);
        if r2 < 1e-20 {
            return Err(Error::NumericalFailure(
                "sample points do not span a fat simplex".into(),
            ));
        }
        let mut v: Vec<f64> = xset
            .point(pick)
            .iter()
            .zip(xset.point(v0))
            .map(|(a, b)| a - b)
            .collect();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vj, qj) in v.iter_mut().zip(q) {
                *vj -= dot * qj;
            }
        }
        let norm = r2.sqrt();
        for vj in &mut v {
            *vj /= norm;
        }
        basis.push(v);
        chosen.push(pick);
    }
    Ok(chosen)
}

/// Affine barycentric functions of a simplex: `lambda_i(x) = a_i . x + b_i`.
struct Barycentric {
    grads: Vec<Vec<f64>>,
    offs: Vec<f64>,
    log_det: f64,
}

fn barycentric(xset: &SampleSet, vertices: &[usize]) -> Result<Barycentric> {
    let d = xset.d();
    let v0 = xset.point(vertices[0]);
    let b: Vec<Vec<f64>> = (0..d)
        .map(|row| {
            (0..d)
                .map(|col| xset.point(vertices[col + 1])[row] - v0[row])
                .collect()
        })
        .collect();
    let (binv, det) = invert(b)?;
    let mut grads: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    let mut offs: Vec<f64> = Vec::with_capacity(d + 1);
    // lambda_{j+1} = row_j(Binv) . (x - v0); lambda_0 = 1 - sum.
    let mut a0 = vec![0.0; d];
    let mut b0 = 1.0;
    let mut rows = Vec::with_capacity(d);
    for row in &binv {
        let off: f64 = -row.iter().zip(v0).map(|(r, v)| r * v).sum::<f64>();
        for (a, r) in a0.iter_mut().zip(row) {
            *a -= r;
        }
        b0 -= off;
        rows.push((row.clone(), off));
    }
    grads.push(a0);
    offs.push(b0);
    for (row, off) in rows {
        grads.push(row);
        offs.push(off);
    }
    Ok(Barycentric {
        grads,
        offs,
        log_det: det.ln(),
    })
}

/// The hull clipped to a simplex scaled about its own centroid: membership
/// requires every barycentric coordinate to stay above `floor`.
struct SimplexWindow<'a> {
    hull: &'a TentLevelSet<'a>,
    bary: &'a Barycentric,
    floor: f64,
    center: Vec<f64>,
}

impl SimplexWindow<'_> {
    fn lambda_min(&self, x: &[f64]) -> f64 {
        self.bary
            .grads
            .iter()
            .zip(&self.bary.offs)
            .map(|(a, b)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
            .fold(f64::INFINITY, f64::min)
    }
}

impl ConvexBody for SimplexWindow<'_> {
    fn dim(&self) -> usize {
        self.hull.dim()
    }

    fn contains(&self, x: &[f64]) -> Result<bool> {
        if self.lambda_min(x) < self.floor {
            return Ok(false);
        }
        self.hull.contains(x)
    }

    fn interior_point(&self) -> Result<Vec<f64>> {
        Ok(self.center.clone())
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.hull.bounding_box()
    }

    fn chord(&self, x: &[f64], u: &[f64]) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = self.hull.chord(x, u)?;
        for (a, b) in self.bary.grads.iter().zip(&self.bary.offs) {
            let val: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b;
            let slope: f64 = a.iter().zip(u).map(|(ai, ui)| ai * ui).sum();
            // val + t*slope >= floor
            if slope.abs() < 1e-15 {
                continue;
            }
            let bound = (self.floor - val) / slope;
            if slope > 0.0 {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        Ok((lo.min(0.0), hi.max(0.0)))
    }
}

/// Log-volume of the hull of the sample points by simplex-anchored
/// annealing: start from a fat vertex simplex (exact determinant volume)
/// and scale it about its centroid by 2^(1/d) per phase until it covers
/// the hull.
pub(crate) fn mc_hull_log_volume<R: Rng>(
    xset: &SampleSet,
    zeros: &[f64],
    delta: f64,
    tau: f64,
    walk_steps: usize,
    rng: &mut R,
) -> Result<f64> {
    let d = xset.d();
    let vertices = greedy_simplex(xset)?;
    let bary = barycentric(xset, &vertices)?;
    let mut log_fact = 0.0;
    for i in 2..=d {
        log_fact += (i as f64).ln();
    }
    let log_simplex_vol = bary.log_det - log_fact;

    let mut center = vec![0.0; d];
    for &v in &vertices {
        for (c, p) in center.iter_mut().zip(xset.point(v)) {
            *c += p / (d + 1) as f64;
        }
    }
    // Largest ball about the centroid inside the simplex, for the phase
    // count: distance from the centroid to facet i is lambda_i(g)/|a_i|
    // = 1/((d+1)|a_i|).
    let r_in = bary
        .grads
        .iter()
        .map(|a| {
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            1.0 / ((d + 1) as f64 * norm)
        })
        .fold(f64::INFINITY, f64::min);
    let hull = TentLevelSet::new(xset, zeros, None)?;
    let (bc, br) = hull.bounding_ball();
    let reach = br
        + center
            .iter()
            .zip(&bc)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
    let t_end = (reach / r_in).max(1.0);
    let phases = (d as f64 * t_end.log2()).ceil().max(0.0) as usize;
    if phases == 0 {
        return Ok(log_simplex_vol);
    }
    let draws = phase_draws(phases, delta, tau);
    let mut log_vol = log_simplex_vol;
    let mut prev_floor = 0.0f64; // floor of the window at scale t: (1-t)/(d+1)
    for j in 1..=phases {
        let t = (j as f64 / d as f64).exp2().min(t_end);
        let floor = (1.0 - t) / (d + 1) as f64;
        let window = SimplexWindow {
            hull: &hull,
            bary: &bary,
            floor,
            center: center.clone(),
        };
        let mut hits = 0usize;
        for _ in 0..draws {
            let z = hit_and_run(&window, &center, walk_steps, rng)?;
            if window.lambda_min(&z) >= prev_floor {
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::VolumeFailure(format!(
                "hull annealing phase {j}/{phases} never saw its inner window"
            )));
        }
        log_vol += (draws as f64).ln() - (hits as f64).ln();
        prev_floor = floor;
    }
    Ok(log_vol)
}

/// Volumes of nested tent superlevel sets by downward telescoping: the
/// outermost level is the hull (simplex-anchored above); each inner
/// volume is the outer volume times the fraction of uniform draws from
/// the outer level that clear the inner threshold.
#[allow(clippy::too_many_arguments)]
pub(crate) fn mc_tent_level_volumes<R: Rng>(
    xset: &SampleSet,
    y: &[f64],
    thresholds: &[Option<f64>],
    peak_index: usize,
    peak_value: f64,
    delta: f64,
    tau: f64,
    walk_steps: usize,
    rng: &mut R,
) -> Result<Vec<VolumeEstimate>> {
    let m = thresholds.len();
    let zeros = vec![0.0; xset.n()];
    let hull_log_vol = mc_hull_log_volume(xset, &zeros, delta * 0.5, tau * 0.5, walk_steps, rng)?;
    let mut out = vec![
        VolumeEstimate {
            value: 0.0,
            rel_err: delta,
        };
        m
    ];
    out[m - 1].value = hull_log_vol.exp();
    if m == 1 {
        return Ok(out);
    }
    let draws = phase_draws(m - 1, delta * 0.5, tau * 0.5);
    for li in (0..m - 1).rev() {
        let outer = TentLevelSet::with_peak(xset, y, thresholds[li + 1], peak_index, peak_value)?;
        if out[li + 1].value == 0.0 {
            continue;
        }
        let start = outer.interior_point()?;
        let t_inner = thresholds[li].expect("inner levels carry thresholds");
        let mut hits = 0usize;
        for _ in 0..draws {
            let z = hit_and_run(&outer, &start, walk_steps, rng)?;
            let inside = match crate::lp_core::tent_evaluate(xset, y, &z)? {
                TentValue::Value(h) => h >= t_inner,
                TentValue::OutsideHull => false,
            };
            if inside {
                hits += 1;
            }
        }
        // A level the chain never hits is treated as measure zero and
        // merged into its successor; the mixture arithmetic downstream
        // handles the missing component exactly.
        out[li].value = out[li + 1].value * hits as f64 / draws as f64;
    }
    Ok(out)
}
