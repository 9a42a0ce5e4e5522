//! Dense linear programming over free variables.
//!
//! Problems have the form `minimize c·y` subject to rows `a_j·y <= b_j` or
//! `a_j·y >= b_j`, with `y` unrestricted in sign. The feasibility problems of
//! the minimax fit have many rows (four or five per sample point) and few
//! variables, so the solver runs a two-phase tableau simplex on the dual
//!
//! ```text
//! minimize b·λ   subject to   A^T λ = -c,   λ >= 0,
//! ```
//!
//! whose tableau has only `num_vars` rows. Primal values are recovered as the
//! simplex multipliers of the optimal dual basis, and every optimal answer is
//! re-checked against the original rows before it is returned.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, LuFactors};

/// Entries below this magnitude are never used as pivots.
const PIVOT_TOL: f64 = 1e-11;
/// Nor are entries below this fraction of the largest in their column.
const PIVOT_RTOL: f64 = 1e-7;
/// Optimality tolerance on reduced costs, relative to `1 + |cost|`.
const OPT_TOL: f64 = 1e-12;
/// Phase-one residual above which the dual is declared infeasible.
const PHASE1_TOL: f64 = 1e-9;
/// Rows must hold to within `FEAS_TOL * (1 + |rhs|)` in an optimal outcome.
pub const FEAS_TOL: f64 = 1e-8;
const REINVERT_EVERY: usize = 50;
const SCALING_PASSES: usize = 4;
/// Bound relaxation in the ratio test.
const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Constraint>,
}

impl LinearProgram {
    /// An LP minimizing `objective · y` over `objective.len()` free variables.
    pub fn new(objective: Vec<f64>) -> Result<Self> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("objective coefficient"));
        }
        Ok(Self { num_vars: objective.len(), objective, rows: Vec::new() })
    }

    pub fn with_capacity(objective: Vec<f64>, rows: usize) -> Result<Self> {
        let mut lp = Self::new(objective)?;
        lp.rows.reserve(rows);
        Ok(lp)
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars {
            return Err(Error::MalformedLp(format!(
                "row {} has {} coefficients, expected {}",
                self.rows.len(),
                coeffs.len(),
                self.num_vars
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedLp(format!("row {} has non-finite entries", self.rows.len())));
        }
        self.rows.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        self.add_row(coeffs, Relation::Le, rhs)
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        self.add_row(coeffs, Relation::Ge, rhs)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn objective_at(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Largest row violation of `y`, each scaled by `1 / (1 + |rhs|)`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let lhs: f64 = r.coeffs.iter().zip(y).map(|(a, v)| a * v).sum();
                let v = match r.relation {
                    Relation::Le => lhs - r.rhs,
                    Relation::Ge => r.rhs - lhs,
                };
                v.max(0.0) / (1.0 + r.rhs.abs())
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: a `min` line with the objective, then one line per
    /// row, `<coeffs> <= rhs` or `<coeffs> >= rhs`.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut s = String::new();
        let _ = writeln!(s, "vars {}", self.num_vars);
        let _ = writeln!(s, "min {}", join(&self.objective));
        for r in &self.rows {
            let op = match r.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(s, "{} {op} {:?}", join(&r.coeffs), r.rhs);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    /// Simplex pivots performed.
    pub iterations: usize,
}

impl LpOutcome {
    fn status_only(status: LpStatus, iterations: usize) -> Self {
        Self { status, solution: None, objective_value: None, iterations }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverOptions {
    /// Callers that only need to know whether the optimum is at most this
    /// value. Primal iterates of the dual method are feasible only at the
    /// optimum, so the threshold never shortens the solve; it is accepted so
    /// callers can state intent independently of the algorithm.
    pub early_exit_threshold: Option<f64>,
    /// Pivot cap; defaults to `50 * (num_vars + rows)`.
    pub max_iterations: Option<usize>,
}

pub fn solve_lp(lp: &LinearProgram, early_exit_threshold: Option<f64>) -> Result<LpOutcome> {
    solve_lp_with(lp, SolverOptions { early_exit_threshold, ..Default::default() })
}

pub fn solve_lp_with(lp: &LinearProgram, opts: SolverOptions) -> Result<LpOutcome> {
    let limit = opts.max_iterations.unwrap_or(50 * (lp.num_vars + lp.rows.len()).max(1));
    let Some(mut rows) = normalize_rows(lp) else {
        return Ok(LpOutcome::status_only(LpStatus::Infeasible, 0));
    };
    let col_scale = scale_columns(lp.num_vars, &mut rows);
    let objective: Vec<f64> = lp.objective.iter().zip(&col_scale).map(|(c, s)| c * s).collect();

    let mut iterations = 0;
    match solve_dual(lp.num_vars, &rows, &objective, limit, &mut iterations)? {
        DualResult::Optimal(y) => {
            let y: Vec<f64> = y.iter().zip(&col_scale).map(|(v, s)| v * s).collect();
            let violation = lp.max_violation(&y);
            if violation > FEAS_TOL {
                return Err(Error::MalformedLp(format!(
                    "solution fails its feasibility re-check (violation {violation:e})"
                )));
            }
            let value = lp.objective_at(&y);
            Ok(LpOutcome { status: LpStatus::Optimal, solution: Some(y), objective_value: Some(value), iterations })
        }
        DualResult::Unbounded => Ok(LpOutcome::status_only(LpStatus::Infeasible, iterations)),
        DualResult::Infeasible => {
            // Primal is infeasible or unbounded; settle which with c = 0.
            let zero = vec![0.0; lp.num_vars];
            match solve_dual(lp.num_vars, &rows, &zero, limit, &mut iterations)? {
                DualResult::Unbounded => Ok(LpOutcome::status_only(LpStatus::Infeasible, iterations)),
                _ => Ok(LpOutcome::status_only(LpStatus::Unbounded, iterations)),
            }
        }
    }
}

/// A `<=` row, equilibrated so that `max |a| = 1`.
struct Row {
    a: Vec<f64>,
    b: f64,
}

/// Converts every row to `a·y <= b` and equilibrates. Rows with all-zero
/// coefficients are dropped when satisfied; `None` means one is violated.
fn normalize_rows(lp: &LinearProgram) -> Option<Vec<Row>> {
    let mut out = Vec::with_capacity(lp.rows.len());
    for r in &lp.rows {
        let sign = match r.relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
        };
        let scale = r.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            if sign * r.rhs < -FEAS_TOL * (1.0 + r.rhs.abs()) {
                return None;
            }
            continue;
        }
        let s = sign / scale;
        out.push(Row { a: r.coeffs.iter().map(|a| a * s).collect(), b: r.rhs * s });
    }
    Some(out)
}

/// Geometric scaling of rows and columns (variables), in powers of two so
/// that it adds no rounding. Rows end with `max |a| = 1`; returns the factor
/// `s` with `y = s * y_scaled`.
fn scale_columns(n: usize, rows: &mut [Row]) -> Vec<f64> {
    let pow2 = |x: f64| 2f64.powi(x.log2().round() as i32);
    let mut total = vec![1.0; n];
    for _ in 0..SCALING_PASSES {
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![0.0f64; n];
        for r in rows.iter() {
            for (i, a) in r.a.iter().enumerate() {
                let a = a.abs();
                if a > 0.0 {
                    lo[i] = lo[i].min(a);
                    hi[i] = hi[i].max(a);
                }
            }
        }
        let s: Vec<f64> = (0..n).map(|i| if hi[i] > 0.0 { pow2(1.0 / (lo[i] * hi[i]).sqrt()) } else { 1.0 }).collect();
        for r in rows.iter_mut() {
            r.a.iter_mut().zip(&s).for_each(|(a, si)| *a *= si);
            let (rlo, rhi) = r.a.iter().filter(|a| **a != 0.0).fold((f64::INFINITY, 0.0f64), |(l, h), a| (l.min(a.abs()), h.max(a.abs())));
            let rs = pow2(1.0 / (rlo * rhi).sqrt());
            r.a.iter_mut().for_each(|a| *a *= rs);
            r.b *= rs;
        }
        total.iter_mut().zip(&s).for_each(|(t, si)| *t *= si);
    }
    for r in rows.iter_mut() {
        let m = r.a.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        r.a.iter_mut().for_each(|a| *a /= m);
        r.b /= m;
    }
    total
}

enum DualResult {
    Optimal(Vec<f64>),
    /// Dual unbounded: the primal is infeasible.
    Unbounded,
    /// Dual infeasible: the primal is infeasible or unbounded.
    Infeasible,
}

fn solve_dual(n: usize, rows: &[Row], c: &[f64], limit: usize, iterations: &mut usize) -> Result<DualResult> {
    let mut t = Tableau::new(n, rows, c, limit, *iterations);
    let res = t.run();
    *iterations = t.iterations;
    res
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Optimal,
    Unbounded,
}

struct Tableau<'a> {
    rows: &'a [Row],
    /// Tableau rows = primal variables; columns = dual variables λ_j
    /// (one per primal row) followed by one artificial per tableau row.
    m: usize,
    nreal: usize,
    ncols: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    /// Sign applied to each equality so that the right-hand side is >= 0.
    sign: Vec<f64>,
    /// `sign * (-c)`.
    h: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    rc: Vec<f64>,
    phase: Phase,
    degenerate_run: usize,
    since_reinvert: usize,
    iterations: usize,
    limit: usize,
}

impl<'a> Tableau<'a> {
    fn new(m: usize, rows: &'a [Row], c: &[f64], limit: usize, iterations: usize) -> Self {
        let nreal = rows.len();
        let ncols = nreal + m;
        let sign: Vec<f64> = c.iter().map(|&ci| if -ci < 0.0 { -1.0 } else { 1.0 }).collect();
        let h: Vec<f64> = c.iter().zip(&sign).map(|(&ci, s)| -ci * s).collect();
        let mut t = vec![0.0; m * ncols];
        for (j, row) in rows.iter().enumerate() {
            for i in 0..m {
                t[i * ncols + j] = sign[i] * row.a[i];
            }
        }
        for i in 0..m {
            t[i * ncols + nreal + i] = 1.0;
        }
        let mut cost = vec![0.0; ncols];
        cost[nreal..].iter_mut().for_each(|x| *x = 1.0);
        let mut tab = Self {
            rows,
            m,
            nreal,
            ncols,
            t,
            rhs: h.clone(),
            sign,
            h,
            basis: (nreal..ncols).collect(),
            cost,
            rc: vec![0.0; ncols],
            phase: Phase::One,
            degenerate_run: 0,
            since_reinvert: 0,
            iterations,
            limit,
        };
        tab.price();
        tab
    }

    fn run(&mut self) -> Result<DualResult> {
        // Phase one cannot be unbounded: its objective is bounded below by 0.
        self.iterate()?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| b >= self.nreal)
            .map(|(_, &r)| r.max(0.0))
            .sum();
        let hnorm: f64 = self.h.iter().sum();
        if infeas > PHASE1_TOL * (1.0 + hnorm) {
            return Ok(DualResult::Infeasible);
        }
        self.drive_out_artificials();

        self.phase = Phase::Two;
        for j in 0..self.ncols {
            self.cost[j] = if j < self.nreal { self.rows[j].b } else { 0.0 };
        }
        self.reinvert()?;
        // Re-pricing after a fresh factorization can expose small negative
        // reduced costs hidden by drift; a few rounds settle them.
        for _ in 0..5 {
            if self.iterate()? == Step::Unbounded {
                return Ok(DualResult::Unbounded);
            }
            self.reinvert()?;
            if self.entering().is_none() {
                break;
            }
        }
        Ok(DualResult::Optimal(self.multipliers()?))
    }

    fn iterate(&mut self) -> Result<Step> {
        loop {
            let Some(e) = self.entering() else {
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(e) else {
                return Ok(Step::Unbounded);
            };
            if self.iterations >= self.limit {
                return Err(Error::IterationLimit { limit: self.limit });
            }
            let step = self.rhs[r].max(0.0) / self.t[r * self.ncols + e];
            if step <= 1e-14 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(r, e);
            self.iterations += 1;
            self.since_reinvert += 1;
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
        }
    }

    fn use_bland(&self) -> bool {
        self.degenerate_run > 10 * self.m.max(1)
    }

    fn allowed(&self, j: usize) -> bool {
        j < self.nreal
    }

    fn entering(&self) -> Option<usize> {
        let bland = self.use_bland();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.nreal {
            if !self.allowed(j) {
                continue;
            }
            let tol = OPT_TOL * (1.0 + self.cost[j].abs());
            let r = self.rc[j];
            if r < -tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        if self.use_bland() {
            return self.leaving_bland(e);
        }
        // Harris ratio test: relax each bound by RATIO_SLACK, then take the
        // largest pivot among rows within the relaxed step.
        let col = |i: usize| self.t[i * self.ncols + e];
        let tol = self.pivot_tol(e);
        let bound = (0..self.m)
            .filter(|&i| col(i) > tol)
            .map(|i| (self.rhs[i].max(0.0) + RATIO_SLACK) / col(i))
            .fold(f64::INFINITY, f64::min);
        if bound == f64::INFINITY {
            return None;
        }
        (0..self.m)
            .filter(|&i| col(i) > tol && self.rhs[i].max(0.0) / col(i) <= bound)
            .max_by(|&i, &j| col(i).total_cmp(&col(j)))
    }

    /// Pivot threshold for entering column `e`, relative to its largest entry.
    fn pivot_tol(&self, e: usize) -> f64 {
        let scale = (0..self.m).map(|i| self.t[i * self.ncols + e].abs()).fold(0.0, f64::max);
        PIVOT_TOL.max(PIVOT_RTOL * scale)
    }

    fn leaving_bland(&self, e: usize) -> Option<usize> {
        let tol = self.pivot_tol(e);
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.t[i * self.ncols + e];
            if a <= tol {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            let better = match best {
                None => true,
                Some((bi, br)) => {
                    if (ratio - br).abs() <= 1e-12 * (1.0 + br) {
                        self.basis[i] < self.basis[bi]
                    } else {
                        ratio < br
                    }
                }
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + e];
        let inv = 1.0 / p;
        for v in &mut self.t[r * nc..(r + 1) * nc] {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        self.t[r * nc + e] = 1.0;
        let (pivot_row, rhs_r) = (self.t[r * nc..(r + 1) * nc].to_vec(), self.rhs[r]);
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * nc + e];
            if f != 0.0 {
                let row = &mut self.t[i * nc..(i + 1) * nc];
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[e] = 0.0;
                self.rhs[i] -= f * rhs_r;
            }
        }
        let f = self.rc[e];
        for (x, pr) in self.rc.iter_mut().zip(&pivot_row) {
            *x -= f * pr;
        }
        self.rc[e] = 0.0;
        self.basis[r] = e;
    }

    /// Reduced costs `cost - c_B^T T` from the current tableau.
    fn price(&mut self) {
        self.rc.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
                for (x, t) in self.rc.iter_mut().zip(row) {
                    *x -= cb * t;
                }
            }
        }
        for &b in &self.basis {
            self.rc[b] = 0.0;
        }
    }

    /// Original (sign-adjusted) column `j` of `[A^T | I]`.
    fn column(&self, j: usize) -> Vec<f64> {
        if j < self.nreal {
            self.rows[j].a.iter().zip(&self.sign).map(|(a, s)| a * s).collect()
        } else {
            let mut e = vec![0.0; self.m];
            e[j - self.nreal] = 1.0;
            e
        }
    }

    fn basis_factors(&self) -> Result<LuFactors> {
        let m = self.m;
        let mut b = DenseMatrix::zeros(m);
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column(j).into_iter().enumerate() {
                b[(i, k)] = v;
            }
        }
        LuFactors::factor_with_tol(&b, 1e-15)
    }

    /// Rebuilds the tableau as `B^{-1} [A^T | I]` from the current basis.
    fn reinvert(&mut self) -> Result<()> {
        self.since_reinvert = 0;
        if self.m == 0 {
            self.price();
            return Ok(());
        }
        let lu = self.basis_factors()?;
        for j in 0..self.ncols {
            let col = lu.solve(&self.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                self.t[i * self.ncols + j] = v;
            }
        }
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..self.m {
                self.t[i * self.ncols + j] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.rhs = lu.solve(&self.h)?;
        self.price();
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis where a real column
    /// allows it; rows with no such column are redundant and keep theirs.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.nreal {
                continue;
            }
            let row = &self.t[r * self.ncols..r * self.ncols + self.nreal];
            let best = row
                .iter()
                .enumerate()
                .filter(|(j, _)| !self.basis.contains(j))
                .map(|(j, v)| (j, v.abs()))
                .fold(None::<(usize, f64)>, |acc, cur| match acc {
                    Some(a) if a.1 >= cur.1 => Some(a),
                    _ => Some(cur),
                });
            if let Some((j, v)) = best {
                if v > PIVOT_TOL {
                    self.rhs[r] = 0.0;
                    self.pivot(r, j);
                    self.iterations += 1;
                }
            }
        }
    }

    /// Primal solution `y = S π`, where `B^T π = c_B`.
    fn multipliers(&self) -> Result<Vec<f64>> {
        if self.m == 0 {
            return Ok(Vec::new());
        }
        let lu = self.basis_factors()?;
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let pi = lu.solve_transpose(&cb)?;
        Ok(pi.iter().zip(&self.sign).map(|(p, s)| p * s).collect())
    }
}
