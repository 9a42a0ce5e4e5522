//! The commands behind each subcommand. They take plain settings and return
//! run records, so tests and the experiment suite call them directly.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ratmin_core::functions::Builtin;
use ratmin_core::matrix::{
    cond_check, frobenius_rel_error, rational_apply_vec, rational_apply_with, ApplyOptions, DenseMatrix, NormalMatrix,
};
use ratmin_core::{equidistant_grid, RationalApproximant};
use serde::Serialize;
use serde_json::json;

use crate::record::{csv_table, Check, RunRecord};
use crate::sources::{random_unit_vector, read_numbers, spectrum, FitSettings, FittedTarget, MatrixSource, SpectrumKind};
use crate::UsageError;

/// Slack on the fitted numerator when positivity is imposed.
pub const POSITIVITY_SLACK: f64 = 1e-9;
/// Relative slack on `cond(q(A)) <= u / ℓ`.
pub const COND_SLACK: f64 = 1e-8;

pub fn fit_record(command: &str, s: &FitSettings, fitted: &FittedTarget) -> RunRecord {
    let mut rec = RunRecord::new(command, s);
    add_fit_metrics(&mut rec, "", s, fitted);
    rec.add_fit("fit", fitted.report.clone());
    rec
}

/// Standard metrics and checks of one fit, with names prefixed by `prefix`.
pub fn add_fit_metrics(rec: &mut RunRecord, prefix: &str, s: &FitSettings, fitted: &FittedTarget) {
    let r = &fitted.report;
    rec.metric(format!("{prefix}uniform_error"), fitted.uniform_error)
        .metric(format!("{prefix}denominator_change"), fitted.denominator_change)
        .metric(format!("{prefix}denominator_change_fit_grid"), fitted.denominator_change_fit)
        .metric(format!("{prefix}z_upper"), r.z_upper)
        .metric(format!("{prefix}z_lower"), r.z_lower)
        .metric(format!("{prefix}iterations"), r.iterations as f64)
        .metric(format!("{prefix}doublings"), r.doublings as f64)
        .timing(format!("{prefix}fit_seconds"), fitted.seconds);
    rec.check(Check::holds(
        format!("{prefix}denominator bounds"),
        format!("{} <= q(x_i) <= {} on the fit grid", s.lower, s.upper),
        fitted.bounds_hold,
    ));
    if s.positive {
        rec.metric(format!("{prefix}min_numerator"), fitted.min_numerator);
        rec.check(Check::at_least(format!("{prefix}min numerator on fit grid"), fitted.min_numerator, -POSITIVITY_SLACK));
    }
}

pub struct FitOutput {
    pub record: RunRecord,
    pub fitted: FittedTarget,
}

pub fn cmd_fit(s: &FitSettings) -> Result<FitOutput> {
    let fitted = s.run()?;
    Ok(FitOutput { record: fit_record("fit", s, &fitted), fitted })
}

/// Where a matrix command gets its approximant.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproxSource {
    Fit { settings: FitSettings },
    File { path: PathBuf, reference: Option<Builtin> },
}

struct Resolved {
    approximant: RationalApproximant,
    reference: Option<Builtin>,
    fitted: Option<(FitSettings, FittedTarget)>,
}

impl ApproxSource {
    fn resolve(&self) -> Result<Resolved> {
        match self {
            ApproxSource::Fit { settings } => {
                let fitted = settings.run()?;
                let reference = match &settings.target {
                    crate::sources::Target::Builtin { function } => Some(*function),
                    crate::sources::Target::Table { .. } => None,
                };
                Ok(Resolved {
                    approximant: fitted.approximant().clone(),
                    reference,
                    fitted: Some((settings.clone(), fitted)),
                })
            }
            ApproxSource::File { path, reference } => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(Resolved { approximant: RationalApproximant::from_json(&text)?, reference: *reference, fitted: None })
            }
        }
    }
}

/// Matrix input for the matrix commands.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixSettings {
    pub matrix: Option<PathBuf>,
    pub spectrum: SpectrumKind,
    pub eigs: Option<PathBuf>,
    pub size: usize,
    pub seed: u64,
}

impl MatrixSettings {
    pub fn generated(spectrum: SpectrumKind, size: usize, seed: u64) -> Self {
        Self { matrix: None, spectrum, eigs: None, size, seed }
    }

    fn source(&self, r: &RationalApproximant) -> Result<MatrixSource> {
        match &self.matrix {
            Some(path) => MatrixSource::load(path),
            None => {
                let eigs = spectrum(self.spectrum, self.size, r.domain(), self.seed, self.eigs.as_deref())?;
                MatrixSource::generate(eigs, self.seed)
            }
        }
    }
}

/// `Q^T X Q`: the result expressed in the known eigenbasis.
fn in_eigenbasis(n: &NormalMatrix, x: &DenseMatrix) -> DenseMatrix {
    n.q.transpose().matmul(x).matmul(&n.q)
}

fn add_resolved(rec: &mut RunRecord, res: &Resolved) {
    if let Some((s, fitted)) = &res.fitted {
        add_fit_metrics(rec, "scalar.", s, fitted);
        rec.add_fit("fit", fitted.report.clone());
    }
}

fn add_cond_check(rec: &mut RunRecord, r: &RationalApproximant, n: &NormalMatrix) {
    let cond = cond_check(r, &n.eigenvalues);
    rec.metric("cond_q", cond);
    if let Some(b) = r.bounds() {
        rec.check(Check::at_most("cond(q(A))", cond, b.cond_bound() * (1.0 + COND_SLACK)));
    }
}

/// Evaluates a saved approximant on an equidistant grid of its domain.
pub fn cmd_apply(path: &PathBuf, reference: Option<Builtin>, points: usize) -> Result<(RunRecord, String)> {
    if points < 2 {
        bail!(UsageError("--eval-points must be at least 2".into()));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let r = RationalApproximant::from_json(&text)?;
    let grid = equidistant_grid(r.domain(), points);
    let mut rec = RunRecord::new("apply", json!({ "approximant": path, "reference": reference, "eval_points": points }));
    rec.metric("denominator_change", r.denominator_change(&grid)?);
    let csv = match reference {
        Some(f) => {
            rec.metric("uniform_error", r.uniform_error(|x| f.eval(x), &grid));
            csv_table(&["x", "f", "r", "error"], grid.iter().map(|x| vec![x, f.eval(x), r.eval(x), r.eval(x) - f.eval(x)]))
        }
        None => csv_table(&["x", "r"], grid.iter().map(|x| vec![x, r.eval(x)])),
    };
    Ok((rec, csv))
}

/// `r(A)` and, for generated matrices, the relative Frobenius error against
/// the exact `Q f(D) Q^T`.
pub fn cmd_matfun(src: &ApproxSource, mat: &MatrixSettings, refine: bool) -> Result<RunRecord> {
    let res = src.resolve()?;
    let r = &res.approximant;
    let m = mat.source(r)?;
    let mut rec = RunRecord::new("matfun", json!({ "approximant": src, "matrix": mat, "refine": refine }));
    add_resolved(&mut rec, &res);
    let start = Instant::now();
    let out = rational_apply_with(r, m.matrix(), ApplyOptions { refine, residual: true })?;
    rec.timing("apply_seconds", start.elapsed().as_secs_f64());
    rec.metric("residual", out.residual.unwrap_or(f64::NAN));
    if let Some(c) = out.cond_bound {
        rec.metric("cond_bound", c);
    }
    if let Some(n) = m.known() {
        add_cond_check(&mut rec, r, n);
        if let Some(f) = res.reference {
            let exact = n.exact_function(|x| f.eval(x));
            rec.metric("frobenius_rel_error", frobenius_rel_error(&out.result, &exact)?);
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSettings {
    pub sizes: Vec<usize>,
    pub reps: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self { sizes: vec![100, 500, 1000, 2500], reps: 10 }
    }
}

/// Largest size at which the matvec path is compared against the full path.
pub const PATH_CHECK_MAX_SIZE: usize = 500;
pub const PATH_AGREEMENT_TOL: f64 = 1e-8;

fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let n: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

/// `r(A) v` by forming `r(A)` and multiplying; the reference path for the
/// benchmark.
pub fn explicit_apply_vec(r: &RationalApproximant, a: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let out = rational_apply_with(r, a, ApplyOptions { refine: false, residual: false })?;
    Ok(out.result.matvec(v))
}

/// Mean wall time of the matvec path and of explicit formation.
pub struct PathTiming {
    pub size: usize,
    pub matvec_mean: f64,
    pub explicit_mean: f64,
    pub agreement: f64,
}

pub fn time_paths(r: &RationalApproximant, kind: SpectrumKind, size: usize, seed: u64, reps: usize) -> Result<PathTiming> {
    let eigs = spectrum(kind, size, r.domain(), seed, None)?;
    let m = MatrixSource::generate(eigs, seed)?;
    let a = m.matrix();
    let v = random_unit_vector(size, seed);
    let reps = reps.max(1);
    let mut fast = Vec::new();
    let start = Instant::now();
    for _ in 0..reps {
        fast = rational_apply_vec(r, a, &v)?.result;
    }
    let matvec_mean = start.elapsed().as_secs_f64() / reps as f64;
    let mut slow = Vec::new();
    let start = Instant::now();
    for _ in 0..reps {
        slow = explicit_apply_vec(r, a, &v)?;
    }
    let explicit_mean = start.elapsed().as_secs_f64() / reps as f64;
    Ok(PathTiming { size, matvec_mean, explicit_mean, agreement: rel_diff(&fast, &slow) })
}

/// `r(A) v` through one linear solve, with the error against the exact
/// `Q f(D) Q^T v` when the spectrum is known.
pub fn cmd_matvec(
    src: &ApproxSource,
    mat: &MatrixSettings,
    vector: Option<&PathBuf>,
    bench: Option<&BenchSettings>,
) -> Result<RunRecord> {
    let res = src.resolve()?;
    let r = &res.approximant;
    let m = mat.source(r)?;
    let a = m.matrix();
    let v = match vector {
        Some(p) => read_numbers(p)?,
        None => random_unit_vector(a.dim(), mat.seed),
    };
    if v.len() != a.dim() {
        return Err(ratmin_core::Error::DimensionMismatch { expected: a.dim(), found: v.len() }.into());
    }
    let mut rec = RunRecord::new("matvec", json!({ "approximant": src, "matrix": mat, "vector": vector, "bench": bench }));
    add_resolved(&mut rec, &res);
    let start = Instant::now();
    let out = rational_apply_vec(r, a, &v)?;
    rec.timing("apply_seconds", start.elapsed().as_secs_f64());
    rec.metric("residual", out.residual.unwrap_or(f64::NAN));
    if let Some(n) = m.known() {
        add_cond_check(&mut rec, r, n);
        if let Some(f) = res.reference {
            let exact = n.exact_function_vec(|x| f.eval(x), &v);
            let err: f64 = out.result.iter().zip(&exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            rec.metric("abs_error", err);
            let vn: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            rec.metric("error_over_vector_norm", if vn == 0.0 { err } else { err / vn });
            rec.metric("rel_error", rel_diff(&out.result, &exact));
        }
    }
    if a.dim() <= PATH_CHECK_MAX_SIZE {
        let full = explicit_apply_vec(r, a, &v)?;
        let agreement = rel_diff(&out.result, &full);
        rec.metric("path_agreement", agreement);
        rec.check(Check::at_most("matvec path vs full r(A)", agreement, PATH_AGREEMENT_TOL));
    }
    if let Some(b) = bench {
        for &k in &b.sizes {
            let t = time_paths(r, mat.spectrum, k, mat.seed, b.reps)?;
            rec.metric(format!("k{k}.path_agreement"), t.agreement);
            rec.timing(format!("k{k}.matvec_mean"), t.matvec_mean);
            rec.timing(format!("k{k}.explicit_mean"), t.explicit_mean);
        }
    }
    Ok(rec)
}

/// Eigenvalue-wise comparison of a ReLU approximant applied to a matrix.
pub struct PsdSummary {
    /// `max_i |μ_i - max(0, λ_i)|` with `μ = diag(Q^T r(A) Q)`.
    pub max_deviation: f64,
    /// Same quantity from scalar evaluation `r(λ_i)`.
    pub scalar_deviation: f64,
    pub below_tolerance: usize,
    pub min_eigenvalue: f64,
    pub off_diagonal: f64,
}

pub fn psd_summary(r: &RationalApproximant, n: &NormalMatrix, x: &DenseMatrix, tolerance: f64) -> PsdSummary {
    let t = in_eigenbasis(n, x);
    let k = t.dim();
    let mu = t.diag();
    let max_deviation = mu.iter().zip(&n.eigenvalues).map(|(m, l)| (m - l.max(0.0)).abs()).fold(0.0, f64::max);
    let scalar_deviation = n.eigenvalues.iter().map(|&l| (r.eval(l) - l.max(0.0)).abs()).fold(0.0, f64::max);
    let mut off = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                off = off.max(t.row(i)[j].abs());
            }
        }
    }
    PsdSummary {
        max_deviation,
        scalar_deviation,
        below_tolerance: mu.iter().filter(|&&m| m < -tolerance).count(),
        min_eigenvalue: mu.iter().copied().fold(f64::INFINITY, f64::min),
        off_diagonal: off,
    }
}

/// Agreement between eigenvalues of the computed `r(A)` and scalar `r(λ)`.
pub const EIGEN_AGREEMENT_TOL: f64 = 1e-8;

/// Applies a ReLU approximant to a symmetric matrix, pushing it toward the
/// positive-semidefinite cone.
pub fn cmd_psd(src: &ApproxSource, mat: &MatrixSettings) -> Result<RunRecord> {
    let res = src.resolve()?;
    let r = &res.approximant;
    let m = mat.source(r)?;
    let mut rec = RunRecord::new("psd", json!({ "approximant": src, "matrix": mat }));
    add_resolved(&mut rec, &res);
    let start = Instant::now();
    let out = rational_apply_with(r, m.matrix(), ApplyOptions::default())?;
    rec.timing("apply_seconds", start.elapsed().as_secs_f64());
    rec.metric("residual", out.residual.unwrap_or(f64::NAN));
    if let Some(n) = m.known() {
        add_cond_check(&mut rec, r, n);
        let tol = res.fitted.as_ref().map_or(0.0, |(_, f)| f.uniform_error);
        let s = psd_summary(r, n, &out.result, tol);
        rec.metric("max_eigen_deviation", s.max_deviation)
            .metric("scalar_eigen_deviation", s.scalar_deviation)
            .metric("eigenvalues_below_minus_error", s.below_tolerance as f64)
            .metric("min_result_eigenvalue", s.min_eigenvalue)
            .metric("eigenbasis_off_diagonal", s.off_diagonal);
        rec.check(Check::at_most(
            "eigenvalue deviation beyond scalar oracle",
            (s.max_deviation - s.scalar_deviation).abs(),
            EIGEN_AGREEMENT_TOL,
        ));
    }
    Ok(rec)
}
