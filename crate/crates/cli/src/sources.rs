//! Inputs shared by the commands: target functions, fit settings, spectra
//! and random vectors.
//!
//! Randomness: every random quantity is drawn from ChaCha20 seeded with the
//! 64-bit `--seed`. The orthogonal eigenbasis uses the seed directly; the
//! eigenvalues and the test vector use the same key on separate ChaCha
//! streams, so changing the spectrum never perturbs the vector.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use ratmin_core::functions::{Builtin, FilterParams};
use ratmin_core::matrix::io as matrix_io;
use ratmin_core::{
    cheb_nodes, equidistant_grid, fit, BoundSpec, DenseMatrix, Domain, FitProblem, FitReport, Grid,
    NormalMatrix, RationalApproximant, SpectrumSpec,
};
use serde::{Deserialize, Serialize};

use crate::record::csv_table;
use crate::UsageError;

pub const STREAM_EIGENVALUES: u64 = 1;
pub const STREAM_VECTOR: u64 = 2;

/// Half-width of each cluster in the clustered spectrum, centred at ±0.3.
pub const CLUSTER_HALF_WIDTH: f64 = 0.01;

/// The function being approximated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Builtin { function: Builtin },
    /// Explicit samples; fits and errors use exactly these points.
    Table { path: PathBuf, x: Vec<f64>, f: Vec<f64> },
}

impl Target {
    pub fn builtin(b: Builtin) -> Self {
        Target::Builtin { function: b }
    }

    pub fn domain(&self) -> Result<Domain> {
        match self {
            Target::Builtin { function } => Ok(function.domain()),
            Target::Table { x, .. } => Ok(Domain::new(x[0], x[x.len() - 1])?),
        }
    }

    /// Reads `x,f` rows; a non-numeric first line is taken as a header.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading table {}", path.display()))?;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = match fields.as_slice() {
                [a, b] => a.parse::<f64>().and_then(|x| b.parse::<f64>().map(|y| (x, y))).ok(),
                _ => None,
            };
            match parsed {
                Some(p) => rows.push(p),
                None if rows.is_empty() && lineno == 0 => continue,
                None => bail!(UsageError(format!("{}:{}: expected `x,f`", path.display(), lineno + 1))),
            }
        }
        if rows.len() < 2 {
            bail!(UsageError(format!("table {} needs at least two samples", path.display())));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, f) = rows.into_iter().unzip();
        Ok(Target::Table { path: path.to_path_buf(), x, f })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Equidistant,
    Chebyshev,
}

impl GridKind {
    pub fn build(self, d: &Domain, n: usize) -> Grid {
        match self {
            GridKind::Equidistant => equidistant_grid(d, n),
            GridKind::Chebyshev => cheb_nodes(n).mapped_onto(d),
        }
    }
}

/// Everything that determines a fit, serialized into run records verbatim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSettings {
    pub target: Target,
    pub num_degree: usize,
    pub den_degree: usize,
    pub lower: f64,
    pub upper: f64,
    pub positive: bool,
    pub epsilon: f64,
    pub fit_points: usize,
    pub eval_points: usize,
    pub grid: GridKind,
}

impl FitSettings {
    /// Defaults of the fitting protocol: 400 equidistant fit points, 1000
    /// equidistant evaluation points, `ε = 1e-12`, `ℓ = 1`.
    pub fn new(function: Builtin, num_degree: usize, den_degree: usize, upper: f64) -> Self {
        Self {
            target: Target::builtin(function),
            num_degree,
            den_degree,
            lower: 1.0,
            upper,
            positive: false,
            epsilon: ratmin_core::minimax::DEFAULT_EPSILON,
            fit_points: 400,
            eval_points: 1000,
            grid: GridKind::Equidistant,
        }
    }

    pub fn positive(mut self, on: bool) -> Self {
        self.positive = on;
        self
    }

    pub fn bounds(&self) -> Result<BoundSpec> {
        Ok(BoundSpec::new(self.lower, self.upper, self.positive)?)
    }

    pub fn fit_grid(&self) -> Result<Grid> {
        match &self.target {
            Target::Table { x, .. } => Ok(Grid::new(x.clone())?),
            Target::Builtin { function } => Ok(self.grid.build(&function.domain(), self.fit_points)),
        }
    }

    /// Equidistant on the domain for builtins; the samples themselves for
    /// tables.
    pub fn eval_grid(&self) -> Result<Grid> {
        match &self.target {
            Target::Table { x, .. } => Ok(Grid::new(x.clone())?),
            Target::Builtin { function } => Ok(equidistant_grid(&function.domain(), self.eval_points)),
        }
    }

    pub fn problem(&self) -> Result<FitProblem> {
        let grid = self.fit_grid()?;
        let values = match &self.target {
            Target::Table { f, .. } => f.clone(),
            Target::Builtin { function } => grid.iter().map(|x| function.eval(x)).collect(),
        };
        let p = FitProblem::new(
            self.target.domain()?,
            grid,
            values,
            self.num_degree,
            self.den_degree,
            self.bounds()?,
        )?;
        Ok(p.with_epsilon(self.epsilon)?)
    }

    pub fn run(&self) -> Result<FittedTarget> {
        let problem = self.problem()?;
        let start = Instant::now();
        let report = fit(&problem)?;
        let seconds = start.elapsed().as_secs_f64();
        let eval_grid = self.eval_grid()?;
        let eval_values = self.target_values(&eval_grid);
        let r = &report.approximant;
        let uniform_error = match &self.target {
            Target::Builtin { function } => r.uniform_error(|x| function.eval(x), &eval_grid),
            Target::Table { f, .. } => r.uniform_error_values(&eval_grid, f),
        };
        let denominator_change = r.denominator_change(&eval_grid)?;
        let fit_grid = problem.grid().clone();
        let denominator_change_fit = r.denominator_change(&fit_grid)?;
        let bounds_hold = r.verify_bounds(&fit_grid, problem.bounds()).is_satisfied();
        let min_numerator = fit_grid.iter().map(|x| r.numerator_at(x)).fold(f64::INFINITY, f64::min);
        Ok(FittedTarget {
            report,
            fit_grid,
            eval_grid,
            eval_values,
            uniform_error,
            denominator_change,
            denominator_change_fit,
            bounds_hold,
            min_numerator,
            seconds,
        })
    }

    fn target_values(&self, g: &Grid) -> Vec<f64> {
        match &self.target {
            Target::Builtin { function } => g.iter().map(|x| function.eval(x)).collect(),
            Target::Table { f, .. } => f.clone(),
        }
    }
}

/// A finished fit with the diagnostics every command reports.
#[derive(Debug, Clone)]
pub struct FittedTarget {
    pub report: FitReport,
    pub fit_grid: Grid,
    pub eval_grid: Grid,
    pub eval_values: Vec<f64>,
    /// Uniform error on the evaluation grid.
    pub uniform_error: f64,
    /// `max|q| / min|q|` on the evaluation grid.
    pub denominator_change: f64,
    /// The same on the fit grid, where the bounds are imposed.
    pub denominator_change_fit: f64,
    pub bounds_hold: bool,
    pub min_numerator: f64,
    pub seconds: f64,
}

impl FittedTarget {
    pub fn approximant(&self) -> &RationalApproximant {
        &self.report.approximant
    }

    /// `x, f, r, error` rows on the evaluation grid.
    pub fn plot_csv(&self) -> String {
        let r = self.approximant();
        csv_table(
            &["x", "f", "r", "error"],
            self.eval_grid.iter().zip(&self.eval_values).map(|(x, &f)| {
                let rx = r.eval(x);
                vec![x, f, rx, rx - f]
            }),
        )
    }
}

/// Builtin lookup with optional filter-parameter overrides.
pub fn builtin_with_overrides(
    id: &str,
    center: Option<f64>,
    width: Option<f64>,
    rise: Option<f64>,
) -> Result<Builtin> {
    let b: Builtin = id.parse().map_err(|e: ratmin_core::Error| UsageError(e.to_string()))?;
    if center.is_none() && width.is_none() && rise.is_none() {
        return Ok(b);
    }
    let Some(p) = b.params() else {
        bail!(UsageError(format!("--center/--width/--rise only apply to filter and bell, not {id}")));
    };
    let p = FilterParams::new(center.unwrap_or(p.center), width.unwrap_or(p.width), rise.unwrap_or(p.rise))?;
    Ok(b.with_params(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    /// Roots of `T_k` mapped onto the domain.
    Chebyshev,
    /// Seeded uniform draws on the domain.
    Uniform,
    /// Half the eigenvalues in `[-0.31, -0.29]`, half in `[0.29, 0.31]`.
    Clustered,
    /// Read from `--eigs`.
    File,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Eigenvalues for a generated test matrix, sorted ascending.
pub fn spectrum(kind: SpectrumKind, k: usize, domain: &Domain, seed: u64, file: Option<&Path>) -> Result<Vec<f64>> {
    if k == 0 && kind != SpectrumKind::File {
        bail!(UsageError("--size must be positive".into()));
    }
    let mut eigs = match kind {
        SpectrumKind::Chebyshev => cheb_nodes(k).mapped_onto(domain).into(),
        SpectrumKind::Uniform => {
            let mut rng = stream_rng(seed, STREAM_EIGENVALUES);
            (0..k).map(|_| rng.gen_range(domain.a()..=domain.b())).collect()
        }
        SpectrumKind::Clustered => {
            let mut rng = stream_rng(seed, STREAM_EIGENVALUES);
            (0..k)
                .map(|i| {
                    let c = if i < k / 2 { -0.3 } else { 0.3 };
                    rng.gen_range(c - CLUSTER_HALF_WIDTH..=c + CLUSTER_HALF_WIDTH)
                })
                .collect()
        }
        SpectrumKind::File => {
            let path = file.ok_or_else(|| UsageError("--spectrum file needs --eigs <path>".into()))?;
            read_numbers(path)?
        }
    };
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

/// Seeded vector with independent standard-normal entries, normalized.
pub fn random_unit_vector(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, STREAM_VECTOR);
    let mut v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Whitespace- or comma-separated numbers.
pub fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let out: std::result::Result<Vec<f64>, _> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse::<f64>)
        .collect();
    let out = out.map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    if out.is_empty() {
        bail!(UsageError(format!("{} holds no numbers", path.display())));
    }
    Ok(out)
}

/// A test matrix: either loaded from disk, or generated with a known
/// eigendecomposition.
pub enum MatrixSource {
    Loaded(DenseMatrix),
    Known(NormalMatrix),
}

impl MatrixSource {
    pub fn matrix(&self) -> &DenseMatrix {
        match self {
            MatrixSource::Loaded(m) => m,
            MatrixSource::Known(n) => &n.matrix,
        }
    }

    pub fn known(&self) -> Option<&NormalMatrix> {
        match self {
            MatrixSource::Known(n) => Some(n),
            MatrixSource::Loaded(_) => None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(MatrixSource::Loaded(matrix_io::load(path)?))
    }

    pub fn generate(eigenvalues: Vec<f64>, seed: u64) -> Result<Self> {
        Ok(MatrixSource::Known(NormalMatrix::new(&SpectrumSpec::new(eigenvalues, seed)?)))
    }
}
