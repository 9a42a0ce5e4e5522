//! Argument parsing and dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ratmin_core::functions::Builtin;

use crate::commands::{cmd_apply, cmd_fit, cmd_matfun, cmd_matvec, cmd_psd, ApproxSource, BenchSettings, MatrixSettings};
use crate::experiments::{find, ExperimentConfig, EXPERIMENTS};
use crate::record::{write_atomic, RunRecord};
use crate::sources::{builtin_with_overrides, FitSettings, GridKind, SpectrumKind, Target};
use crate::{exit_code_for, UsageError, EXIT_OK, EXIT_TOLERANCE};

#[derive(Debug, Parser)]
#[command(name = "ratmin", version, about = "Constrained minimax rational approximation and matrix functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a rational approximant to a builtin function or a sample table.
    Fit(FitCmd),
    /// Evaluate a saved approximant on a grid.
    Apply(ApplyCmd),
    /// Form r(A) for a matrix.
    Matfun(MatrixCmd),
    /// Compute r(A) v with one linear solve.
    Matvec(MatvecCmd),
    /// Apply a positive ReLU approximant to a symmetric matrix.
    Psd(MatrixCmd),
    /// Run the reproduction experiments.
    Reproduce(ReproduceCmd),
}

#[derive(Debug, Clone, Args)]
pub struct TargetFlags {
    /// Builtin function: f1, f2, f3, f4, filter, bell, relu.
    #[arg(long, conflicts_with = "table")]
    pub func: Option<String>,
    /// CSV of `x,f` samples to fit instead of a builtin.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Filter/bell centre.
    #[arg(long)]
    pub center: Option<f64>,
    /// Filter/bell plateau width.
    #[arg(long)]
    pub width: Option<f64>,
    /// Filter/bell transition width.
    #[arg(long)]
    pub rise: Option<f64>,
}

impl TargetFlags {
    fn builtin(&self) -> Result<Option<Builtin>> {
        self.func.as_deref().map(|id| builtin_with_overrides(id, self.center, self.width, self.rise)).transpose()
    }

    fn target(&self) -> Result<Option<Target>> {
        if let Some(path) = &self.table {
            return Target::load_table(path).map(Some);
        }
        Ok(self.builtin()?.map(Target::builtin))
    }
}

fn parse_degrees(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, m) = s.split_once(',').ok_or_else(|| format!("expected `n,m`, got {s:?}"))?;
    let n = n.trim().parse().map_err(|e| format!("numerator degree: {e}"))?;
    let m = m.trim().parse().map_err(|e| format!("denominator degree: {e}"))?;
    Ok((n, m))
}

#[derive(Debug, Clone, Args)]
pub struct FitFlags {
    #[command(flatten)]
    pub target: TargetFlags,
    /// Numerator and denominator degrees.
    #[arg(long, value_name = "N,M", value_parser = parse_degrees)]
    pub deg: Option<(usize, usize)>,
    /// Lower denominator bound ℓ.
    #[arg(long, default_value_t = 1.0)]
    pub lbound: f64,
    /// Upper denominator bound u [default: 1e6, 100 for psd].
    #[arg(long)]
    pub ubound: Option<f64>,
    /// Require a nonnegative numerator on the fit grid.
    #[arg(long)]
    pub positive: bool,
    /// Bisection precision.
    #[arg(long, default_value_t = 1e-12)]
    pub eps: f64,
    #[arg(long, default_value_t = 400)]
    pub fit_points: usize,
    #[arg(long, default_value_t = 1000)]
    pub eval_points: usize,
    #[arg(long, value_enum, default_value_t = GridKind::Equidistant)]
    pub grid: GridKind,
}

impl FitFlags {
    fn settings(&self, default_upper: f64, default_deg: Option<(usize, usize)>, force_positive: bool) -> Result<FitSettings> {
        let target = self.target.target()?.ok_or_else(|| UsageError("one of --func or --table is required".into()))?;
        let (n, m) = self.deg.or(default_deg).ok_or_else(|| UsageError("--deg n,m is required".into()))?;
        if self.fit_points < 2 || self.eval_points < 2 {
            bail!(UsageError("--fit-points and --eval-points must be at least 2".into()));
        }
        Ok(FitSettings {
            target,
            num_degree: n,
            den_degree: m,
            lower: self.lbound,
            upper: self.ubound.unwrap_or(default_upper),
            positive: self.positive || force_positive,
            epsilon: self.eps,
            fit_points: self.fit_points,
            eval_points: self.eval_points,
            grid: self.grid,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputFlags {
    /// Write the run record (JSON) here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write plot data (CSV) here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub fit: FitFlags,
    #[command(flatten)]
    pub output: OutputFlags,
    /// Write the fitted approximant (JSON) here.
    #[arg(long)]
    pub save: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyCmd {
    /// Approximant JSON written by `fit --save`.
    #[arg(long)]
    pub approx: PathBuf,
    #[command(flatten)]
    pub target: TargetFlags,
    #[arg(long, default_value_t = 1000)]
    pub eval_points: usize,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixFlags {
    /// Matrix file (CSV or binary); without it a matrix with known
    /// eigendecomposition is generated.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SpectrumKind::Chebyshev)]
    pub spectrum: SpectrumKind,
    /// Eigenvalue file for `--spectrum file`.
    #[arg(long)]
    pub eigs: Option<PathBuf>,
    /// Matrix size k.
    #[arg(long, default_value_t = 100)]
    pub size: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl MatrixFlags {
    fn settings(&self) -> MatrixSettings {
        MatrixSettings {
            matrix: self.matrix.clone(),
            spectrum: self.spectrum,
            eigs: self.eigs.clone(),
            size: self.size,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct MatrixCmd {
    /// Saved approximant; without it one is fitted from the fit flags.
    #[arg(long)]
    pub approx: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitFlags,
    #[command(flatten)]
    pub matrix: MatrixFlags,
    /// One step of iterative refinement in the linear solve.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub output: OutputFlags,
}

#[derive(Debug, Args)]
pub struct MatvecCmd {
    #[command(flatten)]
    pub inner: MatrixCmd,
    /// Vector file; default is a seeded random unit vector.
    #[arg(long)]
    pub vector: Option<PathBuf>,
    /// Time the matvec path against forming r(A).
    #[arg(long)]
    pub bench: bool,
    /// Sizes for `--bench`.
    #[arg(long, value_delimiter = ',', default_values_t = [100, 500, 1000, 2500])]
    pub sizes: Vec<usize>,
    /// Repetitions per size for `--bench`.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct ReproduceCmd {
    /// List experiments without running them.
    #[arg(long)]
    pub list: bool,
    /// Run only these experiments (repeatable); default is all.
    #[arg(long)]
    pub experiment: Vec<String>,
    #[arg(long, default_value = "reproduce-out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Matrix size of the timing comparison.
    #[arg(long, default_value_t = 2500)]
    pub timing_size: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
}

impl MatrixCmd {
    fn source(&self, default_upper: f64, default_deg: Option<(usize, usize)>, positive: bool) -> Result<ApproxSource> {
        match &self.approx {
            Some(path) => {
                if self.fit.target.table.is_some() {
                    bail!(UsageError("--table has no pointwise reference for a saved approximant".into()));
                }
                Ok(ApproxSource::File { path: path.clone(), reference: self.fit.target.builtin()? })
            }
            None => Ok(ApproxSource::Fit { settings: self.fit.settings(default_upper, default_deg, positive)? }),
        }
    }
}

const DEFAULT_UPPER: f64 = 1e6;
const PSD_UPPER: f64 = 100.0;

fn emit(rec: &RunRecord, out: &OutputFlags, csv: Option<&str>) -> Result<u8> {
    match &out.out {
        Some(p) => rec.write(p)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{}", rec.to_json())?;
        }
    }
    if let (Some(p), Some(text)) = (&out.csv, csv) {
        write_atomic(p, text.as_bytes())?;
    }
    for c in &rec.checks {
        eprintln!("{}", c.describe());
    }
    Ok(if rec.passed() { EXIT_OK } else { EXIT_TOLERANCE })
}

fn reproduce(cmd: &ReproduceCmd) -> Result<u8> {
    if cmd.list {
        for e in EXPERIMENTS {
            println!("{:<14} {}", e.name, e.target);
        }
        return Ok(EXIT_OK);
    }
    let selected: Vec<_> = if cmd.experiment.is_empty() {
        EXPERIMENTS.iter().collect()
    } else {
        cmd.experiment
            .iter()
            .map(|n| find(n).ok_or_else(|| UsageError(format!("unknown experiment {n:?}; see --list"))))
            .collect::<std::result::Result<_, _>>()?
    };
    let cfg = ExperimentConfig { seed: cmd.seed, timing_size: cmd.timing_size, timing_reps: cmd.reps };
    fs::create_dir_all(&cmd.out_dir).with_context(|| format!("creating {}", cmd.out_dir.display()))?;
    let mut table = Vec::new();
    let mut all_pass = true;
    for e in selected {
        let out = e.execute(&cfg)?;
        out.record.write(&cmd.out_dir.join(format!("{}.json", e.name)))?;
        for (stem, csv) in &out.plots {
            write_atomic(&cmd.out_dir.join(format!("{stem}.csv")), csv.as_bytes())?;
        }
        for c in &out.record.checks {
            table.push(format!("{:<14} {}", e.name, c.describe()));
        }
        all_pass &= out.record.passed();
    }
    for line in &table {
        println!("{line}");
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_TOLERANCE })
}

fn save_approximant(path: &Path, r: &ratmin_core::RationalApproximant) -> Result<()> {
    write_atomic(path, r.to_json()?.as_bytes())
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Fit(c) => {
            let out = cmd_fit(&c.fit.settings(DEFAULT_UPPER, None, false)?)?;
            if let Some(p) = &c.save {
                save_approximant(p, out.fitted.approximant())?;
            }
            emit(&out.record, &c.output, Some(&out.fitted.plot_csv()))
        }
        Command::Apply(c) => {
            if c.target.table.is_some() {
                bail!(UsageError("apply compares against --func only".into()));
            }
            let (rec, csv) = cmd_apply(&c.approx, c.target.builtin()?, c.eval_points)?;
            emit(&rec, &c.output, Some(&csv))
        }
        Command::Matfun(c) => {
            let rec = cmd_matfun(&c.source(DEFAULT_UPPER, None, false)?, &c.matrix.settings(), c.refine)?;
            emit(&rec, &c.output, None)
        }
        Command::Matvec(c) => {
            let bench = c.bench.then(|| BenchSettings { sizes: c.sizes.clone(), reps: c.reps });
            let inner = &c.inner;
            let rec = cmd_matvec(
                &inner.source(DEFAULT_UPPER, None, false)?,
                &inner.matrix.settings(),
                c.vector.as_ref(),
                bench.as_ref(),
            )?;
            emit(&rec, &inner.output, None)
        }
        Command::Psd(mut c) => {
            if c.approx.is_none() && c.fit.target.func.is_none() && c.fit.target.table.is_none() {
                c.fit.target.func = Some("relu".into());
            }
            let rec = cmd_psd(&c.source(PSD_UPPER, Some((5, 5)), true)?, &c.matrix.settings())?;
            emit(&rec, &c.output, None)
        }
        Command::Reproduce(c) => reproduce(&c),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}
