//! Dense two-phase primal simplex.
//!
//! Problems at this crate's scale have a handful of rows and at most a few
//! hundred columns, so a dense tableau beats any factorized representation
//! and, more importantly, is deterministic: Dantzig pricing with fixed
//! tie-breaking, falling back to Bland's rule if the pivot count suggests
//! cycling. All variables are nonnegative; callers split free variables.

use crate::error::{Error, Result};
use crate::lp_core::{ConstraintOp, LpProblem, LpSolution, LpStatus, Sense};

/// Pivot threshold below which a column entry is treated as zero.
const PIVOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, PartialEq)]
enum PricingRule {
    Dantzig,
    Bland,
}

enum RunOutcome {
    Optimal,
    Unbounded { entering: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Row-major constraint matrix, `cols + 1` wide; last entry is the rhs.
    a: Vec<f64>,
    basis: Vec<usize>,
    is_artificial: Vec<bool>,
    /// Column holding the +1 basis seed (slack or artificial) for each row.
    seed_col: Vec<usize>,
    /// Rows whose rhs sign was flipped during normalization.
    flipped: Vec<bool>,
    pivots: usize,
    feas_tol: f64,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn build(problem: &LpProblem, feas_tol: f64) -> Tableau {
        let n_struct = problem.objective.len();
        let rows = problem.constraints.len();

        // First pass: count added columns so the matrix can be laid out
        // flat. Normalizing a negative rhs flips Le and Ge, which changes
        // the column count, so the flip must be anticipated here.
        let mut extra = 0usize;
        for c in &problem.constraints {
            let op = match (c.op, c.rhs < 0.0) {
                (ConstraintOp::Le, true) => ConstraintOp::Ge,
                (ConstraintOp::Ge, true) => ConstraintOp::Le,
                (op, _) => op,
            };
            extra += match op {
                ConstraintOp::Le => 1,
                ConstraintOp::Ge => 2, // surplus + artificial
                ConstraintOp::Eq => 1, // artificial
            };
        }
        let cols = n_struct + extra;
        let width = cols + 1;

        let mut a = vec![0.0; rows * width];
        let mut basis = vec![0usize; rows];
        let mut is_artificial = vec![false; cols];
        let mut seed_col = vec![0usize; rows];
        let mut flipped = vec![false; rows];

        let mut next = n_struct;
        for (r, c) in problem.constraints.iter().enumerate() {
            // Normalize to rhs >= 0 so the seeded basis is primal feasible.
            let flip = c.rhs < 0.0;
            flipped[r] = flip;
            let sign = if flip { -1.0 } else { 1.0 };
            let op = match (c.op, flip) {
                (ConstraintOp::Le, true) => ConstraintOp::Ge,
                (ConstraintOp::Ge, true) => ConstraintOp::Le,
                (op, _) => op,
            };
            for (j, &v) in c.coeffs.iter().enumerate() {
                a[r * width + j] = sign * v;
            }
            a[r * width + cols] = sign * c.rhs;

            match op {
                ConstraintOp::Le => {
                    a[r * width + next] = 1.0;
                    basis[r] = next;
                    seed_col[r] = next;
                    next += 1;
                }
                ConstraintOp::Ge => {
                    a[r * width + next] = -1.0;
                    next += 1;
                    a[r * width + next] = 1.0;
                    is_artificial[next] = true;
                    basis[r] = next;
                    seed_col[r] = next;
                    next += 1;
                }
                ConstraintOp::Eq => {
                    a[r * width + next] = 1.0;
                    is_artificial[next] = true;
                    basis[r] = next;
                    seed_col[r] = next;
                    next += 1;
                }
            }
        }
        debug_assert_eq!(next, cols);

        Tableau {
            rows,
            cols,
            a,
            basis,
            is_artificial,
            seed_col,
            flipped,
            pivots: 0,
            feas_tol,
        }
    }

    /// Reduced-cost row and current objective for the given cost vector.
    fn reduced_costs(&self, cost: &[f64]) -> (Vec<f64>, f64) {
        let mut r = vec![0.0; self.cols];
        r[..cost.len()].copy_from_slice(cost);
        let mut z = 0.0;
        for row in 0..self.rows {
            let cb = if self.basis[row] < cost.len() {
                cost[self.basis[row]]
            } else {
                0.0
            };
            if cb != 0.0 {
                z += cb * self.rhs(row);
                for j in 0..self.cols {
                    r[j] -= cb * self.at(row, j);
                }
            }
        }
        // Basic columns must price to zero; scrub accumulated noise.
        for row in 0..self.rows {
            r[self.basis[row]] = 0.0;
        }
        (r, z)
    }

    fn pivot(&mut self, pr: usize, pc: usize, r: &mut [f64], z: &mut f64) {
        let width = self.width();
        let pivot = self.a[pr * width + pc];
        debug_assert!(pivot.abs() > PIVOT_TOL);
        let inv = 1.0 / pivot;
        for j in 0..width {
            self.a[pr * width + j] *= inv;
        }
        self.a[pr * width + pc] = 1.0;

        for row in 0..self.rows {
            if row == pr {
                continue;
            }
            let factor = self.a[row * width + pc];
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                self.a[row * width + j] -= factor * self.a[pr * width + j];
            }
            self.a[row * width + pc] = 0.0;
        }

        let factor = r[pc];
        if factor != 0.0 {
            *z += factor * self.a[pr * width + self.cols];
            for j in 0..self.cols {
                r[j] -= factor * self.a[pr * width + j];
            }
            r[pc] = 0.0;
        }

        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations for `cost` until optimal or unbounded.
    ///
    /// Artificial columns start basic and may leave, but never re-enter;
    /// this holds in both phases.
    fn run(&mut self, cost: &[f64], max_pivots: usize) -> Result<(RunOutcome, Vec<f64>, f64)> {
        let (mut r, mut z) = self.reduced_costs(cost);
        let bland_after = self.pivots + 50 + 10 * (self.rows + self.cols);
        let hard_cap = self.pivots + max_pivots;
        let opt_tol = self.feas_tol;

        loop {
            let rule = if self.pivots > bland_after {
                PricingRule::Bland
            } else {
                PricingRule::Dantzig
            };

            // Entering column.
            let mut entering: Option<usize> = None;
            let mut best = -opt_tol;
            for j in 0..self.cols {
                if self.is_artificial[j] {
                    continue;
                }
                if r[j] < -opt_tol {
                    match rule {
                        PricingRule::Bland => {
                            entering = Some(j);
                            break;
                        }
                        PricingRule::Dantzig => {
                            if r[j] < best {
                                best = r[j];
                                entering = Some(j);
                            }
                        }
                    }
                }
            }
            let Some(pc) = entering else {
                return Ok((RunOutcome::Optimal, r, z));
            };

            // Leaving row: minimum ratio, ties broken toward the smallest
            // basis variable index, which is both deterministic and the
            // anti-cycling choice under Bland's rule.
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for row in 0..self.rows {
                let coef = self.at(row, pc);
                if coef > PIVOT_TOL {
                    let ratio = self.rhs(row) / coef;
                    let better = ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && leave.is_some_and(|l| self.basis[row] < self.basis[l]));
                    if better || leave.is_none() {
                        best_ratio = ratio.min(best_ratio);
                        leave = Some(row);
                    }
                }
            }
            let Some(pr) = leave else {
                return Ok((RunOutcome::Unbounded { entering: pc }, r, z));
            };

            self.pivot(pr, pc, &mut r, &mut z);
            if self.pivots > hard_cap {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
        }
    }

    /// Pivots basic artificial variables out after phase 1 where possible.
    fn drive_out_artificials(&mut self) {
        for row in 0..self.rows {
            if !self.is_artificial[self.basis[row]] {
                continue;
            }
            let pc = (0..self.cols)
                .find(|&j| !self.is_artificial[j] && self.at(row, j).abs() > 1e-7);
            if let Some(pc) = pc {
                let mut dummy_r = vec![0.0; self.cols];
                let mut dummy_z = 0.0;
                self.pivot(row, pc, &mut dummy_r, &mut dummy_z);
            }
            // A row with no eligible pivot is redundant; its artificial stays
            // basic at level ~0, which is harmless since artificials never
            // re-enter.
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for row in 0..self.rows {
            x[self.basis[row]] = self.rhs(row);
        }
        x
    }
}

fn validate(problem: &LpProblem) -> Result<()> {
    let n = problem.objective.len();
    if n == 0 {
        return Err(Error::NumericalFailure("LP has no variables".into()));
    }
    if !problem.objective.iter().all(|v| v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite objective".into()));
    }
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::NumericalFailure(format!(
                "constraint {i} has {} coefficients, expected {n}",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || !c.coeffs.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "constraint {i} has non-finite data"
            )));
        }
    }
    Ok(())
}

/// Residual checks against the original problem; `Err` means the tableau
/// drifted and the caller should retry or report `NumericalFailure`.
fn verify_solution(
    problem: &LpProblem,
    x: &[f64],
    dual: &[f64],
    reduced: &[f64],
    feas_tol: f64,
) -> Result<()> {
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, c) in problem.constraints.iter().enumerate() {
        let ax: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        let scale = 1.0 + c.rhs.abs() + xmax;
        let tol = feas_tol * scale * 100.0;
        let violated = match c.op {
            ConstraintOp::Le => ax > c.rhs + tol,
            ConstraintOp::Ge => ax < c.rhs - tol,
            ConstraintOp::Eq => (ax - c.rhs).abs() > tol,
        };
        if violated {
            return Err(Error::NumericalFailure(format!(
                "primal residual {:.3e} on constraint {i}",
                ax - c.rhs
            )));
        }
        // Complementary slackness: an inactive inequality must carry a
        // (near-)zero multiplier.
        if (ax - c.rhs).abs() > tol && dual[i].abs() * (ax - c.rhs).abs() > tol * (1.0 + dual[i].abs()) {
            return Err(Error::NumericalFailure(format!(
                "complementary slackness residual on constraint {i}"
            )));
        }
    }
    for (j, &v) in x.iter().enumerate() {
        if v < -feas_tol * 100.0 * (1.0 + xmax) {
            return Err(Error::NumericalFailure(format!(
                "negative variable x[{j}] = {v:.3e}"
            )));
        }
        // Dual-side complementarity: positive variables price to zero.
        if v > feas_tol * 100.0 * (1.0 + xmax) && reduced[j].abs() * v > feas_tol * 1e4 * (1.0 + xmax) {
            return Err(Error::NumericalFailure(format!(
                "reduced cost {:.3e} on basic-level variable {j}",
                reduced[j]
            )));
        }
    }
    Ok(())
}

fn solve_inner(problem: &LpProblem, feas_tol: f64, bland_only: bool) -> Result<LpSolution> {
    let n = problem.objective.len();
    let mut t = Tableau::build(problem, feas_tol);
    if bland_only {
        // Force Bland from the first pivot by exhausting the Dantzig window.
        t.pivots = usize::MAX / 2;
    }
    let max_pivots = 1000 + 200 * (t.rows + t.cols);

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; t.cols];
    for j in 0..t.cols {
        if t.is_artificial[j] {
            phase1_cost[j] = 1.0;
        }
    }
    let needs_phase1 = t.is_artificial.iter().any(|&b| b);
    if needs_phase1 {
        let (outcome, _, z1) = t.run(&phase1_cost, max_pivots)?;
        if matches!(outcome, RunOutcome::Unbounded { .. }) {
            // Impossible: phase 1 is bounded below by zero.
            return Err(Error::NumericalFailure("phase 1 reported unbounded".into()));
        }
        let rhs_scale = 1.0 + (0..t.rows).map(|r| t.rhs(r).abs()).fold(0.0, f64::max);
        if z1 > feas_tol * rhs_scale * 100.0 {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                dual: vec![0.0; t.rows],
                objective: f64::NAN,
                alternate_optima: false,
                ray: None,
            });
        }
        t.drive_out_artificials();
    }

    // Phase 2: the real objective, minimized; `Maximize` was negated upstream.
    let mut cost = vec![0.0; t.cols];
    let negate = matches!(problem.sense, Sense::Maximize);
    for j in 0..n {
        cost[j] = if negate {
            -problem.objective[j]
        } else {
            problem.objective[j]
        };
    }
    let (outcome, reduced, z) = t.run(&cost, max_pivots)?;

    match outcome {
        RunOutcome::Unbounded { entering } => {
            let full = t.primal();
            // Improving ray: entering variable grows at unit rate, basic
            // variables move against their column.
            let mut dir = vec![0.0; t.cols];
            dir[entering] = 1.0;
            for row in 0..t.rows {
                dir[t.basis[row]] = -t.at(row, entering);
            }
            Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: full[..n].to_vec(),
                dual: vec![0.0; t.rows],
                objective: if negate {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                alternate_optima: false,
                ray: Some(dir[..n].to_vec()),
            })
        }
        RunOutcome::Optimal => {
            let full = t.primal();
            let x = full[..n].to_vec();

            // Duals read off the reduced costs of each row's +1 seed column
            // (slack or artificial, both carry zero phase-2 cost), then
            // mapped back through rhs-normalization flips and the sense.
            let mut dual = vec![0.0; t.rows];
            for row in 0..t.rows {
                let mut pi = -reduced[t.seed_col[row]];
                if t.flipped[row] {
                    pi = -pi;
                }
                if negate {
                    pi = -pi;
                }
                dual[row] = pi;
            }

            let alternate = (0..t.cols).any(|j| {
                !t.is_artificial[j]
                    && !t.basis.contains(&j)
                    && reduced[j].abs() <= feas_tol * 100.0
            });

            let objective = if negate { -z } else { z };
            verify_solution(problem, &x, &dual, &reduced, feas_tol)?;
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                dual,
                objective,
                alternate_optima: alternate,
                ray: None,
            })
        }
    }
}

/// Solves `problem` to the given feasibility tolerance.
///
/// Deterministic: identical inputs produce identical solutions, pivots and
/// all. On residual-verification failure the solve is retried once under
/// Bland's rule before reporting `NumericalFailure`.
pub fn solve_lp(problem: &LpProblem, feas_tol: f64) -> Result<LpSolution> {
    validate(problem)?;
    let tol = if feas_tol > 0.0 { feas_tol } else { 1e-9 };
    match solve_inner(problem, tol, false) {
        Ok(sol) => Ok(sol),
        Err(Error::NumericalFailure(_)) => solve_inner(problem, tol, true),
        Err(e) => Err(e),
    }
}
