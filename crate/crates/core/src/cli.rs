//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::deskew::{crop_center, deskew_iterative, DEFAULT_MAX_ANGLE, DEFAULT_PASSES};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_manifest, metrics_csv, rotation_sweep, sweep_csv, sweep_svg, PipelineOptions, SweepOptions, SweepReport,
};
use crate::ga::{evolve, GaParams, StructuralOpProbs};
use crate::io;
use crate::model::{Canvas, TableGenotype};
use crate::render::{generate_dataset, BorderStyle, DatasetManifest, IntRange, TableConfig};
use crate::skeleton::{degrade, load_external, NoiseParams};
use crate::xycut::{estimate_structure, EstimatorParams, DEFAULT_MIN_FRAC, DEFAULT_THRESHOLD};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "TABLEGRID_THREADS";

#[derive(Debug, Parser)]
#[command(name = "tablegrid", version, about = "Table structure recovery from skeleton images")]
pub struct Cli {
    /// Canvas size in pixels.
    #[arg(long, global = true, default_value = "595x842", value_parser = parse_canvas)]
    pub canvas: Canvas,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate scan/skeleton/genotype triples and a manifest.
    Gen(GenArgs),
    /// Add line artifacts and intensity jitter to a skeleton.
    Degrade(DegradeArgs),
    /// Estimate a genotype from a skeleton by projection.
    Estimate(EstimateArgs),
    /// Refine a genotype against a skeleton with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Estimate and undo the rotation of a scan.
    Deskew(DeskewArgs),
    /// Score structure recovery over a manifest.
    Eval(EvalArgs),
    /// Score structure recovery over a range of rotation angles.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Built-in configuration name, `all`, or a JSON configuration file. Repeatable.
    #[arg(long = "config", required = true)]
    pub configs: Vec<String>,
    /// Tables per configuration.
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "blurry")]
    pub style: BorderStyle,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Artifact count range as MIN:MAX.
    #[arg(long, default_value = "2:6", value_parser = parse_int_range)]
    pub artifacts: IntRange,
    /// Artifact length relative to the longest line of the same orientation.
    #[arg(long, default_value_t = 0.2)]
    pub artifact_len_frac: f64,
    #[arg(long, default_value_t = 3)]
    pub artifact_thickness: u32,
    #[arg(long, default_value_t = 0.0)]
    pub jitter_sigma: f64,
}

impl NoiseArgs {
    fn params(&self, seed: u64) -> NoiseParams {
        NoiseParams {
            artifact_count_range: self.artifacts,
            artifact_len_frac: self.artifact_len_frac,
            artifact_thickness: self.artifact_thickness,
            gray_jitter_sigma: self.jitter_sigma,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// Binarization threshold; values at or below are black.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    /// Minimum run length relative to the longest run.
    #[arg(long, default_value_t = DEFAULT_MIN_FRAC)]
    pub min_frac: f64,
    /// Pad row heights with zeros up to this length.
    #[arg(long, default_value_t = 0)]
    pub max_rows: usize,
    /// Pad column widths with zeros up to this length.
    #[arg(long, default_value_t = 0)]
    pub max_cols: usize,
}

impl EstimatorArgs {
    fn params(&self) -> EstimatorParams {
        EstimatorParams {
            threshold: self.threshold,
            min_frac: self.min_frac,
            max_rows: self.max_rows,
            max_cols: self.max_cols,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Skeleton image; resampled to the canvas when sizes differ.
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Output genotype JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn is_on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Args)]
pub struct GaArgs {
    #[arg(long, default_value_t = 50)]
    pub population: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub elitism: Toggle,
    #[arg(long, default_value_t = 0.7)]
    pub reproduce_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub numeric_mutation_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub structural_mutation_prob: f64,
    #[arg(long, default_value_t = 0.03)]
    pub add_prob: f64,
    #[arg(long, default_value_t = 0.03)]
    pub merge_prob: f64,
    #[arg(long, default_value_t = 0.03)]
    pub remove_prob: f64,
    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    #[arg(long, default_value_t = 200)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 2)]
    pub headroom: usize,
    /// Border style of rendered candidates.
    #[arg(long = "ga-style", default_value = "blurry")]
    pub style: BorderStyle,
}

impl GaArgs {
    fn params(&self, seed: u64) -> GaParams {
        GaParams {
            population_size: self.population,
            elitism: self.elitism.is_on(),
            reproduce_frac: self.reproduce_frac,
            numeric_mutation_prob: self.numeric_mutation_prob,
            structural_mutation_prob: self.structural_mutation_prob,
            structural_op_probs: StructuralOpProbs {
                add: self.add_prob,
                merge: self.merge_prob,
                remove: self.remove_prob,
            },
            numeric_mutation_sigma: self.sigma,
            convergence_epsilon: self.epsilon,
            convergence_window: self.window,
            max_epochs: self.max_epochs,
            headroom: self.headroom,
            style: self.style,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Target skeleton image.
    #[arg(long)]
    pub skeleton: PathBuf,
    /// Initial genotype JSON; estimated from the skeleton when omitted.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch best fitness as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub ga: GaArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
pub struct DeskewArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PASSES)]
    pub passes: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ANGLE)]
    pub max_angle: f64,
    /// Skew report JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Center-crop the result to the canvas.
    #[arg(long)]
    pub crop: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Metrics CSV, one row per configuration.
    #[arg(long)]
    pub csv: PathBuf,
    /// Per-table comparisons and reports as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Directory of `<stem>.skel.png` files used instead of the rendered skeletons.
    #[arg(long)]
    pub skeletons: Option<PathBuf>,
    /// Degrade skeletons before estimation (requires --seed).
    #[arg(long)]
    pub noise: bool,
    /// Refine estimates with the genetic algorithm (requires --seed).
    #[arg(long)]
    pub ga: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub noise_args: NoiseArgs,
    #[command(flatten)]
    pub ga_args: GaArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeskewMode {
    On,
    Off,
    Both,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Rotation angles in degrees as START:STOP:STEP, endpoints inclusive.
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    pub angles: AngleRange,
    #[arg(long, value_enum, default_value = "on")]
    pub deskew: DeskewMode,
    #[arg(long)]
    pub csv: PathBuf,
    /// Line plot of the sweep.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Full sweep rows, including residual skew, as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PASSES)]
    pub passes: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ANGLE)]
    pub max_angle: f64,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

/// Inclusive list of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleRange(pub Vec<f64>);

fn parse_canvas(s: &str) -> std::result::Result<Canvas, String> {
    s.parse()
}

fn parse_int_range(s: &str) -> std::result::Result<IntRange, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got {s:?}"))?;
    let lo: i32 = lo.trim().parse().map_err(|e| format!("bad minimum {lo:?}: {e}"))?;
    let hi: i32 = hi.trim().parse().map_err(|e| format!("bad maximum {hi:?}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(IntRange::new(lo, hi))
}

/// Parses `START:STOP:STEP` with inclusive endpoints.
pub fn parse_angles(s: &str) -> std::result::Result<AngleRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(format!("expected START:STOP:STEP, got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("bad number {v:?}: {e}"));
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err("angles must be finite".into());
    }
    if start == stop {
        return Ok(AngleRange(vec![start]));
    }
    if step == 0.0 || (stop - start).signum() != step.signum() {
        return Err(format!("step {step} does not move from {start} toward {stop}"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let angles = (0..=n).map(|i| {
        let a = start + i as f64 * step;
        (a * 1e9).round() / 1e9
    });
    Ok(AngleRange(angles.collect()))
}

fn resolve_configs(specs: &[String]) -> Result<Vec<TableConfig>> {
    let mut out = Vec::new();
    for spec in specs {
        if spec == "all" {
            out.extend(TableConfig::all_builtin());
        } else if let Some(c) = TableConfig::builtin(spec) {
            out.push(c);
        } else if Path::new(spec).is_file() {
            out.push(io::read_json(Path::new(spec))?);
        } else {
            return Err(Error::InvalidParam(format!(
                "unknown configuration {spec:?} (built-in: {}, all, or a JSON file)",
                TableConfig::BUILTIN_NAMES.join(", ")
            )));
        }
    }
    Ok(out)
}

fn load_skeleton(path: &Path, canvas: Canvas) -> Result<crate::model::RasterImage> {
    load_external(path, canvas.width, canvas.height)
}

fn run_gen(a: &GenArgs, canvas: Canvas) -> Result<()> {
    let configs = resolve_configs(&a.configs)?;
    let manifest = generate_dataset(&configs, a.count, &a.out, canvas, a.seed, &a.style)?;
    eprintln!("wrote {} tables to {}", manifest.entries.len(), a.out.display());
    Ok(())
}

fn run_degrade(a: &DegradeArgs) -> Result<()> {
    let img = io::read_image(&a.input)?;
    io::write_png(&a.out, &degrade(&img, &a.noise.params(a.seed))?)
}

fn run_estimate(a: &EstimateArgs, canvas: Canvas) -> Result<()> {
    let g = estimate_structure(&load_skeleton(&a.skeleton, canvas)?, &a.estimator.params())?;
    match &a.out {
        Some(path) => io::write_json(path, &g),
        None => {
            let json = serde_json::to_string_pretty(&g).map_err(|e| Error::InvalidParam(e.to_string()))?;
            println!("{json}");
            Ok(())
        }
    }
}

fn run_optimize(a: &OptimizeArgs, canvas: Canvas) -> Result<()> {
    let target = load_skeleton(&a.skeleton, canvas)?;
    let initial: TableGenotype = match &a.init {
        Some(path) => io::read_json(path)?,
        None => estimate_structure(&target, &a.estimator.params())?,
    };
    let result = evolve(&initial, &target, &a.ga.params(a.seed))?;
    io::write_json(&a.out, &result.best)?;
    if let Some(path) = &a.history {
        io::write_text(path, &result.history_csv())?;
    }
    eprintln!(
        "best fitness {:.6} after {} epochs ({})",
        result.best_fitness.value(),
        result.history.len().saturating_sub(1),
        if result.converged { "converged" } else { "epoch limit" }
    );
    Ok(())
}

fn run_deskew(a: &DeskewArgs, canvas: Canvas) -> Result<()> {
    let img = io::read_image(&a.input)?;
    let (out, report) = deskew_iterative(&img, a.passes, a.max_angle)?;
    let out = if a.crop { crop_center(&out, canvas.width, canvas.height)? } else { out };
    io::write_png(&a.out, &out)?;
    if let Some(path) = &a.report {
        io::write_json(path, &report)?;
    }
    Ok(())
}

fn run_eval(a: &EvalArgs) -> std::result::Result<(), CliError> {
    let seed = match (a.noise || a.ga, a.seed) {
        (true, None) => return Err(CliError::Usage("--noise and --ga require --seed".into())),
        (_, s) => s.unwrap_or(0),
    };
    let manifest = DatasetManifest::load(&a.manifest)?;
    let opts = PipelineOptions {
        estimator: a.estimator.params(),
        noise: a.noise.then(|| a.noise_args.params(seed)),
        ga: a.ga.then(|| a.ga_args.params(seed)),
    };
    let evaluation = evaluate_manifest(&manifest, &opts, a.skeletons.as_deref())?;
    io::write_text(&a.csv, &metrics_csv(&evaluation.reports))?;
    if let Some(path) = &a.json {
        io::write_json(path, &evaluation)?;
    }
    for e in evaluation.entries.iter().filter_map(|e| e.error.as_ref().map(|m| (&e.stem, m))) {
        eprintln!("skipped {}: {}", e.0, e.1);
    }
    Ok(())
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let opts = SweepOptions { estimator: a.estimator.params(), passes: a.passes, max_angle: a.max_angle };
    let modes: &[bool] = match a.deskew {
        DeskewMode::On => &[true],
        DeskewMode::Off => &[false],
        DeskewMode::Both => &[false, true],
    };
    let mut report = SweepReport::default();
    for &mode in modes {
        report.rows.extend(rotation_sweep(&manifest, &a.angles.0, mode, &opts)?.rows);
    }
    io::write_text(&a.csv, &sweep_csv(&report.rows))?;
    if let Some(path) = &a.svg {
        io::write_text(path, &sweep_svg(&report.rows))?;
    }
    if let Some(path) = &a.json {
        io::write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam(_) | Error::EmptyRange(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e),
        }
    }
}

fn dispatch(cli: &Cli) -> std::result::Result<(), CliError> {
    let canvas = cli.canvas;
    match &cli.command {
        Command::Gen(a) => run_gen(a, canvas)?,
        Command::Degrade(a) => run_degrade(a)?,
        Command::Estimate(a) => run_estimate(a, canvas)?,
        Command::Optimize(a) => run_optimize(a, canvas)?,
        Command::Deskew(a) => run_deskew(a, canvas)?,
        Command::Eval(a) => run_eval(a)?,
        Command::Sweep(a) => run_sweep(a)?,
    }
    Ok(())
}

fn thread_count() -> std::result::Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
        Err(_) => Ok(None),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = match thread_count() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}
