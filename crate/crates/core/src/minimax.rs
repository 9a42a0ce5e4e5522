//! Minimax rational fitting by bisection on the error level.
//!
//! For a level `z`, the set of `(p, q)` with `|f(x_i) - p(x_i)/q(x_i)| <= z`
//! and `lower <= q(x_i) <= upper` is described by linear inequalities in the
//! coefficients. Each level is decided by one LP that minimizes a common
//! slack `θ`; the level is feasible when the optimum is non-positive.

use serde::Serialize;

use crate::cheb::{cheb_vector_into, ChebCoeffs, Domain, Grid};
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::rational::{BoundSpec, RationalApproximant};

/// A level is feasible when the optimal slack is at most this.
pub const THETA_TOL: f64 = 1e-9;
pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const MAX_DOUBLINGS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    domain: Domain,
    grid: Grid,
    values: Vec<f64>,
    n: usize,
    m: usize,
    bounds: BoundSpec,
    epsilon: f64,
}

impl FitProblem {
    /// Fits a degree-`n` numerator over a degree-`m` denominator to
    /// `values[i] = f(grid[i])`, with polynomials expanded on `domain`.
    pub fn new(
        domain: Domain,
        grid: Grid,
        values: Vec<f64>,
        n: usize,
        m: usize,
        bounds: BoundSpec,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sample value"));
        }
        if grid.len() < n + m + 2 {
            return Err(Error::InsufficientNodes { degree: n + m, nodes: grid.len() });
        }
        if let Some(x) = grid.iter().find(|&x| !domain.contains(x)) {
            return Err(Error::InvalidProblem(format!("grid point {x} lies outside the domain")));
        }
        Ok(Self { domain, grid, values, n, m, bounds, epsilon: DEFAULT_EPSILON })
    }

    /// Samples `f` on `grid`; the domain is the grid's hull.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64, n: usize, m: usize, bounds: BoundSpec) -> Result<Self> {
        let pts = grid.points();
        let domain = match (pts.first(), pts.last()) {
            (Some(&a), Some(&b)) => Domain::new(a, b)?,
            _ => return Err(Error::EmptyGrid),
        };
        let values = grid.iter().map(&f).collect();
        Self::new(domain, grid, values, n, m, bounds)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidProblem(format!("bisection precision must be positive, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn numerator_degree(&self) -> usize {
        self.n
    }

    pub fn denominator_degree(&self) -> usize {
        self.m
    }

    pub fn bounds(&self) -> &BoundSpec {
        &self.bounds
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn num_vars(&self) -> usize {
        self.n + self.m + 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelCheck {
    pub z: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub approximant: RationalApproximant,
    pub z_lower: f64,
    pub z_upper: f64,
    /// Bisection steps, not counting the initial level or doublings.
    pub iterations: usize,
    /// Upper level the search started from, before any doubling.
    pub z_initial: f64,
    pub doublings: usize,
    pub level_trace: Vec<LevelCheck>,
}

/// Numerator and denominator coefficients certifying a feasible level.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

/// The level-`z` feasibility LP over `(α_0..α_n, β_0..β_m, θ)`.
pub fn assemble_feasibility(p: &FitProblem, z: f64) -> Result<LinearProgram> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(Error::InvalidProblem(format!("error level must be finite and non-negative, got {z}")));
    }
    let (n, m) = (p.n, p.m);
    let nv = p.num_vars();
    let mut objective = vec![0.0; nv];
    objective[nv - 1] = 1.0;
    let per_point = if p.bounds.positive() { 5 } else { 4 };
    let mut lp = LinearProgram::with_capacity(objective, per_point * p.grid.len())?;
    let (ell, u) = (p.bounds.lower(), p.bounds.upper());

    let mut g = Vec::with_capacity(n + 1);
    let mut h = Vec::with_capacity(m + 1);
    for (x, &f) in p.grid.iter().zip(&p.values) {
        let t = p.domain.map_to_ref(x);
        g.clear();
        h.clear();
        cheb_vector_into(t, n, &mut g);
        cheb_vector_into(t, m, &mut h);

        // (f - z) q - p <= θ
        let mut row = vec![0.0; nv];
        row[..=n].iter_mut().zip(&g).for_each(|(r, gj)| *r = -gj);
        row[n + 1..nv - 1].iter_mut().zip(&h).for_each(|(r, hj)| *r = (f - z) * hj);
        row[nv - 1] = -1.0;
        lp.add_le(row, 0.0)?;

        // p - (f + z) q <= θ
        let mut row = vec![0.0; nv];
        row[..=n].copy_from_slice(&g);
        row[n + 1..nv - 1].iter_mut().zip(&h).for_each(|(r, hj)| *r = -(f + z) * hj);
        row[nv - 1] = -1.0;
        lp.add_le(row, 0.0)?;

        let mut row = vec![0.0; nv];
        row[n + 1..nv - 1].copy_from_slice(&h);
        lp.add_ge(row.clone(), ell)?;
        lp.add_le(row, u)?;

        if p.bounds.positive() {
            let mut row = vec![0.0; nv];
            row[..=n].copy_from_slice(&g);
            lp.add_ge(row, 0.0)?;
        }
    }
    Ok(lp)
}

/// Decides level `z`; returns the LP's optimal coefficients when feasible.
pub fn check_level(p: &FitProblem, z: f64) -> Result<Option<Witness>> {
    let lp = assemble_feasibility(p, z)?;
    let out = solve_lp(&lp, Some(0.0)).map_err(|e| Error::Level { z, source: Box::new(e) })?;
    match out.status {
        LpStatus::Optimal => {
            let theta = out.objective_value.unwrap_or(f64::INFINITY);
            if theta > THETA_TOL {
                return Ok(None);
            }
            let y = out.solution.unwrap_or_default();
            Ok(Some(Witness { num: y[..=p.n].to_vec(), den: y[p.n + 1..p.n + p.m + 2].to_vec() }))
        }
        // With both rows for every point the slack is bounded below by
        // -z * upper, so neither status occurs for a well-formed problem.
        LpStatus::Infeasible | LpStatus::Unbounded => Err(Error::Level {
            z,
            source: Box::new(Error::InvalidProblem(format!("feasibility LP reported {:?}", out.status))),
        }),
    }
}

/// Bisection on the error level, returning the witness of the last
/// feasible level.
pub fn fit(p: &FitProblem) -> Result<FitReport> {
    let mut trace = Vec::new();
    let mut check = |z: f64| -> Result<Option<Witness>> {
        let w = check_level(p, z)?;
        trace.push(LevelCheck { z, feasible: w.is_some() });
        Ok(w)
    };

    let (fmin, fmax, fabs) = p.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY, 0.0f64), |(lo, hi, a), &v| {
        (lo.min(v), hi.max(v), a.max(v.abs()))
    });
    let z_initial = if p.bounds.positive() { fabs } else { (fmax - fmin) / 2.0 };

    let mut hi = z_initial;
    let mut doublings = 0;
    let mut witness = check(hi)?;
    if witness.is_none() && hi == 0.0 {
        // Doubling zero goes nowhere; restart from the scale of the data.
        hi = fabs.max(p.epsilon);
        witness = check(hi)?;
    }
    while witness.is_none() {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::Unsatisfiable { last_level: hi });
        }
        hi *= 2.0;
        doublings += 1;
        witness = check(hi)?;
    }
    let mut best = witness.expect("loop exits on a feasible level");

    let mut lo = 0.0;
    let mut iterations = 0;
    while hi - lo > p.epsilon {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        match check(mid)? {
            Some(w) => {
                hi = mid;
                best = w;
            }
            None => lo = mid,
        }
    }

    let approximant = RationalApproximant::new(p.domain, ChebCoeffs::new(best.num)?, ChebCoeffs::new(best.den)?)
        .with_bounds(p.bounds);
    Ok(FitReport {
        approximant,
        z_lower: lo,
        z_upper: hi,
        iterations,
        z_initial,
        doublings,
        level_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheb::equidistant_grid;
    use crate::lp::Relation;

    fn bounds(l: f64, u: f64) -> BoundSpec {
        BoundSpec::new(l, u, false).unwrap()
    }

    fn hat() -> FitProblem {
        let grid = Grid::new(vec![0.0, 0.5, 1.0]).unwrap();
        FitProblem::new(Domain::new(0.0, 1.0).unwrap(), grid, vec![0.0, 1.0, 0.0], 0, 0, bounds(1.0, 2.0)).unwrap()
    }

    #[test]
    fn row_count_and_layout() {
        let lp = assemble_feasibility(&hat(), 0.3).unwrap();
        assert_eq!(lp.num_vars(), 3);
        assert_eq!(lp.rows().len(), 12);
        assert_eq!(lp.objective(), &[0.0, 0.0, 1.0]);
        // second point, f = 1: (1 - z) β - α <= θ
        let r = &lp.rows()[4];
        assert_eq!(r.relation, Relation::Le);
        assert_eq!(r.coeffs, vec![-1.0, 0.7, -1.0]);
        let r = &lp.rows()[5];
        assert_eq!(r.coeffs, vec![1.0, -1.3, -1.0]);

        let pos = FitProblem { bounds: BoundSpec::new(1.0, 2.0, true).unwrap(), ..hat() };
        assert_eq!(assemble_feasibility(&pos, 0.3).unwrap().rows().len(), 15);
        assert!(assemble_feasibility(&pos, -1.0).is_err());
    }

    #[test]
    fn zero_approximant_level() {
        let p = hat();
        let lp = assemble_feasibility(&p, 1.0).unwrap();
        let out = solve_lp(&lp, Some(0.0)).unwrap();
        assert!(out.objective_value.unwrap() <= 0.0);
        assert!(lp.max_violation(&[0.0, 1.0, 0.0]) == 0.0);
    }

    #[test]
    fn hat_levels() {
        let p = hat();
        assert!(check_level(&p, 0.4).unwrap().is_none());
        assert!(check_level(&p, 0.49).unwrap().is_none());
        let w = check_level(&p, 0.5).unwrap().unwrap();
        assert!((w.num[0] / w.den[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn hat_fit_converges_to_half() {
        let p = hat().with_epsilon(1e-10).unwrap();
        let r = fit(&p).unwrap();
        assert!(r.z_upper - r.z_lower <= 1e-10);
        assert!((r.z_upper - 0.5).abs() < 1e-8);
        assert!((r.approximant.eval(0.25) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn constant_target() {
        let grid = equidistant_grid(&Domain::new(0.0, 1.0).unwrap(), 11);
        let p = FitProblem::from_fn(grid, |_| 3.0, 0, 0, bounds(1.0, 2.0)).unwrap().with_epsilon(1e-10).unwrap();
        assert!(check_level(&p, 0.1).unwrap().is_some());
        let r = fit(&p).unwrap();
        assert!(r.z_upper <= 1e-10);
        assert!((r.approximant.eval(0.3) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn positivity_start_is_feasible() {
        let grid = equidistant_grid(&Domain::unit(), 21);
        let b = BoundSpec::new(1.0, 10.0, true).unwrap();
        let p = FitProblem::from_fn(grid.clone(), |x| x, 2, 2, b).unwrap().with_epsilon(1e-6).unwrap();
        let r = fit(&p).unwrap();
        assert_eq!(r.doublings, 0);
        assert!(r.level_trace[0].feasible);
        assert!(r.approximant.verify_bounds(&grid, &b).is_satisfied());
        // Best non-negative fit of x cannot beat 1/2 at x = -1.
        assert!(r.z_upper >= 0.5 - 1e-6);
    }

    #[test]
    fn trace_and_accounting() {
        let grid = equidistant_grid(&Domain::unit(), 30);
        let p = FitProblem::from_fn(grid, |x: f64| x.abs(), 2, 2, bounds(1.0, 5.0)).unwrap().with_epsilon(1e-8).unwrap();
        let r = fit(&p).unwrap();
        assert_eq!(r.level_trace.len(), 1 + r.doublings + r.iterations);
        let expected = ((r.z_initial / 1e-8).log2()).ceil() as i64 + r.doublings as i64;
        assert!((r.iterations as i64 - expected).abs() <= 1);
        assert!(r.z_upper - r.z_lower <= 1e-8);
        let last_feasible = r.level_trace.iter().rev().find(|c| c.feasible).unwrap();
        assert_eq!(last_feasible.z, r.z_upper);
    }

    #[test]
    fn invalid_problems() {
        let grid = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let d = Domain::new(0.0, 2.0).unwrap();
        assert!(FitProblem::new(d, grid.clone(), vec![0.0, 1.0], 0, 0, bounds(1.0, 2.0)).is_err());
        assert!(FitProblem::new(d, grid.clone(), vec![0.0, 1.0, 0.0], 1, 1, bounds(1.0, 2.0)).is_err());
        assert!(FitProblem::new(d, grid.clone(), vec![0.0, f64::NAN, 0.0], 0, 0, bounds(1.0, 2.0)).is_err());
        let small = Domain::new(0.0, 1.0).unwrap();
        assert!(FitProblem::new(small, grid.clone(), vec![0.0; 3], 0, 0, bounds(1.0, 2.0)).is_err());
        let p = FitProblem::new(d, grid, vec![0.0; 3], 0, 0, bounds(1.0, 2.0)).unwrap();
        assert!(p.with_epsilon(0.0).is_err());
    }
}
