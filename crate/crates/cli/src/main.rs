//! `logcave` — maximum-likelihood log-concave density estimation from the
//! command line.
//!
//! Four subcommands cover the pipeline:
//!
//! * `fit` reads training points from CSV, runs the projected stochastic
//!   ascent solver, and writes a self-contained fit document (JSON).
//! * `eval` evaluates a fitted density at query points (zero outside the
//!   hull of the training data).
//! * `sample` draws points from a fitted density by exact rejection.
//! * `partition` estimates the log normalizing constant of a tent
//!   density, from a fit document or from raw points plus heights.
//!
//! Exit codes: 0 success, 2 malformed input, 3 degenerate sample set
//! (the message reports the affine rank found), 4 solver or sampler
//! failure. A `fit` that fails mid-run still writes a partial document.
//! Every invocation appends one record to `manifest.jsonl` (path
//! overridable via `LOGCAVE_MANIFEST`); wall-clock time is recorded only
//! there, so fit documents are byte-reproducible for a fixed seed.

#![forbid(unsafe_code)]

mod artifact;
mod csvio;

use artifact::{
    append_manifest, load_document, save_document, ConfigEcho, FitDocument, ManifestRecord,
    ARTIFACT_VERSION,
};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use logcave_core::{
    build_decomposition, estimate_log_partition, fit, tent_evaluate, Error as CoreError,
    FitReport, SampleSet, SampleStats, SamplerConfig, SolverConfig, TentParams, TentValue,
    TracePoint, VolumeBackend,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "logcave",
    version,
    about = "Maximum-likelihood log-concave density estimation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the maximum-likelihood log-concave density to points in a CSV.
    Fit(FitArgs),
    /// Evaluate a fitted density at query points.
    Eval(EvalArgs),
    /// Draw points from a fitted density.
    Sample(SampleArgs),
    /// Estimate the log normalizing constant of a tent density.
    Partition(PartitionArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    /// Deterministic cell-classification grid (certified, low dimension).
    Grid,
    /// Annealed Monte Carlo volumes driven by hit-and-run walks.
    Mc,
}

impl BackendArg {
    fn to_core(self) -> VolumeBackend {
        match self {
            BackendArg::Grid => VolumeBackend::Grid,
            BackendArg::Mc => VolumeBackend::MonteCarlo,
        }
    }

    fn label(self) -> &'static str {
        match self {
            BackendArg::Grid => "grid",
            BackendArg::Mc => "mc",
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// CSV of training points, one point per row.
    input: PathBuf,
    /// Target objective suboptimality in nats.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Failure probability budget for randomized estimates.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// RNG seed; falls back to LOGCAVE_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap (default 10000).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Target relative error for per-step volume estimates.
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    /// Hit-and-run steps per uniform draw; defaults to 100 d^2.
    #[arg(long)]
    walk_steps: Option<usize>,
    /// Backend for level-set volume estimates.
    #[arg(long, value_enum, default_value_t = BackendArg::Grid)]
    volume_backend: BackendArg,
    /// Where to write the fit document.
    #[arg(long, default_value = "fit.json")]
    output: PathBuf,
    /// Optional CSV trace of the surrogate objective at checkpoints.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV of query points, one per row.
    input: PathBuf,
    /// Fit document produced by `logcave fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Where to write one density value per query row.
    #[arg(long, default_value = "densities.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    /// Fit document produced by `logcave fit`.
    #[arg(long)]
    fit: PathBuf,
    /// Number of draws.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// RNG seed; falls back to LOGCAVE_SEED, then the seed in the document.
    #[arg(long)]
    seed: Option<u64>,
    /// Target relative error for level-set volume estimates.
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    /// Failure probability budget for randomized estimates.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Hit-and-run steps per uniform draw; defaults to 100 d^2.
    #[arg(long)]
    walk_steps: Option<usize>,
    /// Backend for level-set volume estimates.
    #[arg(long, value_enum, default_value_t = BackendArg::Grid)]
    volume_backend: BackendArg,
    /// Where to write the draws, one point per row.
    #[arg(long, default_value = "samples.csv")]
    output: PathBuf,
}

#[derive(Args)]
#[command(group(
    ArgGroup::new("tent_source").required(true).args(["fit", "input"])
))]
struct PartitionArgs {
    /// Fit document supplying both points and heights.
    #[arg(long, conflicts_with = "heights")]
    fit: Option<PathBuf>,
    /// CSV of points; requires --heights.
    #[arg(long, requires = "heights")]
    input: Option<PathBuf>,
    /// Single-column CSV of log-density heights matching --input rows.
    #[arg(long)]
    heights: Option<PathBuf>,
    /// Target relative error for the estimate.
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    /// Failure probability budget.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// RNG seed; falls back to LOGCAVE_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    /// Hit-and-run steps per uniform draw; defaults to 100 d^2.
    #[arg(long)]
    walk_steps: Option<usize>,
    /// Backend for level-set volume estimates.
    #[arg(long, value_enum, default_value_t = BackendArg::Grid)]
    volume_backend: BackendArg,
}

/// A failure mapped to the documented exit codes.
#[derive(Debug)]
enum CliError {
    /// Unreadable or malformed inputs and parameters (exit 2).
    Input(String),
    /// Sample points that do not affinely span their space (exit 3).
    Degenerate(String),
    /// A solver or sampler failure at run time (exit 4).
    Run(String),
    /// An output file that could not be written (exit 1).
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Input(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Run(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Degenerate(m) | CliError::Run(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::DegenerateSampleSet { .. } => CliError::Degenerate(e.to_string()),
            CoreError::InvalidParams(_) => CliError::Input(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

/// What the manifest needs to know about the run, filled in as each
/// command learns it so failures still leave a meaningful record.
#[derive(Default)]
struct RunContext {
    command: &'static str,
    input: String,
    config: serde_json::Value,
    seed: Option<u64>,
    acceptance_rate: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut ctx = RunContext::default();
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a, &mut ctx),
        Command::Eval(a) => cmd_eval(a, &mut ctx),
        Command::Sample(a) => cmd_sample(a, &mut ctx),
        Command::Partition(a) => cmd_partition(a, &mut ctx),
    };
    let record = ManifestRecord {
        command: ctx.command.to_string(),
        input: ctx.input,
        config: ctx.config,
        seed: ctx.seed,
        artifact_version: ARTIFACT_VERSION,
        wall_clock_ms: start.elapsed().as_millis() as u64,
        outcome: match &result {
            Ok(()) => "ok".to_string(),
            Err(e) => format!("error: {}", e.message()),
        },
        acceptance_rate: ctx.acceptance_rate,
    };
    if let Err(e) = append_manifest(&record) {
        eprintln!("warning: could not append to run manifest: {e}");
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// Resolves the run seed: flag, then `LOGCAVE_SEED`, then `fallback`.
fn resolve_seed(flag: Option<u64>, fallback: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("LOGCAVE_SEED") {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            CliError::Input(format!("LOGCAVE_SEED is not an unsigned integer: {text:?}"))
        }),
        Err(_) => Ok(fallback),
    }
}

fn read_points(path: &Path) -> Result<SampleSet, CliError> {
    let rows = csvio::read_table(path).map_err(|e| CliError::Input(e.to_string()))?;
    SampleSet::new(rows).map_err(CliError::from)
}

fn write_failure(path: &Path, err: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {err}", path.display()))
}

/// Sum of tent heights at the training points (each one an LP solve).
fn tent_sum_at_samples(xset: &SampleSet, y: &[f64]) -> Result<f64, CliError> {
    let mut sum = 0.0;
    for i in 0..xset.n() {
        match tent_evaluate(xset, y, xset.point(i)).map_err(CliError::from)? {
            TentValue::Value(v) => sum += v,
            TentValue::OutsideHull => {
                return Err(CliError::Run(
                    "training point reported outside its own hull".to_string(),
                ));
            }
        }
    }
    Ok(sum)
}

fn write_trace(path: &Path, trace: &[TracePoint]) -> std::io::Result<()> {
    let mut out = String::from("iteration,surrogate\n");
    for p in trace {
        out.push_str(&format!("{},{:.15e}\n", p.iteration, p.surrogate));
    }
    std::fs::write(path, out)
}

fn cmd_fit(args: &FitArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    ctx.command = "fit";
    ctx.input = args.input.display().to_string();
    let seed = resolve_seed(args.seed, 7)?;
    ctx.seed = Some(seed);
    let echo = ConfigEcho {
        epsilon: args.epsilon,
        delta: args.delta,
        tau: args.tau,
        max_iters: Some(args.max_iters.unwrap_or(10_000)),
        walk_steps: args.walk_steps,
        volume_backend: args.volume_backend.label().to_string(),
    };
    ctx.config = json!({
        "epsilon": args.epsilon,
        "delta": args.delta,
        "tau": args.tau,
        "maxIters": echo.max_iters,
        "walkSteps": args.walk_steps,
        "volumeBackend": args.volume_backend.label(),
        "output": args.output.display().to_string(),
    });

    let xset = read_points(&args.input)?;
    let cfg = SolverConfig {
        epsilon: args.epsilon,
        tau: args.tau,
        max_iters: echo.max_iters,
        step_scale: None,
        sampler_cfg: SamplerConfig {
            delta: args.delta,
            tau: args.tau,
            seed,
            walk_steps: args.walk_steps,
            volume_backend: args.volume_backend.to_core(),
        },
        projection_radius: None,
    };

    let build_doc = |report: &FitReport, log_partition: Option<f64>| FitDocument {
        schema_version: ARTIFACT_VERSION,
        points: xset.points().to_vec(),
        y: report.y_final.values().to_vec(),
        loglik: report.loglik.is_finite().then_some(report.loglik),
        log_partition,
        iterations: report.iterations,
        seed,
        config: echo.clone(),
        diagnostics: (&report.diagnostics).into(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match fit(&xset, &cfg, &mut rng) {
        Ok(report) => {
            ctx.acceptance_rate = report
                .diagnostics
                .acceptance_rate
                .is_finite()
                .then_some(report.diagnostics.acceptance_rate);
            let sum = tent_sum_at_samples(&xset, report.y_final.values())?;
            let log_partition = (sum - report.loglik) / xset.n() as f64;
            let doc = build_doc(&report, Some(log_partition));
            save_document(&args.output, &doc).map_err(|e| write_failure(&args.output, e))?;
            if let Some(trace_path) = &args.trace {
                write_trace(trace_path, &report.surrogate_trace)
                    .map_err(|e| write_failure(trace_path, e))?;
            }
            println!(
                "fit: loglik {:.6}, logPartition {:.6}, {} iterations -> {}",
                report.loglik,
                log_partition,
                report.iterations,
                args.output.display()
            );
            Ok(())
        }
        Err(fail) => {
            ctx.acceptance_rate = fail
                .partial
                .diagnostics
                .acceptance_rate
                .is_finite()
                .then_some(fail.partial.diagnostics.acceptance_rate);
            // Leave a partial document behind so the run is inspectable.
            let doc = build_doc(&fail.partial, None);
            if let Err(e) = save_document(&args.output, &doc) {
                eprintln!("warning: could not write partial document: {e}");
            }
            if let Some(trace_path) = &args.trace {
                if let Err(e) = write_trace(trace_path, &fail.partial.surrogate_trace) {
                    eprintln!("warning: could not write trace: {e}");
                }
            }
            Err(CliError::from(fail.error))
        }
    }
}

fn cmd_eval(args: &EvalArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    ctx.command = "eval";
    ctx.input = args.input.display().to_string();
    ctx.config = json!({
        "fit": args.fit.display().to_string(),
        "output": args.output.display().to_string(),
    });

    let doc = load_document(&args.fit).map_err(CliError::Input)?;
    let xset = SampleSet::new(doc.points).map_err(CliError::from)?;
    let params = TentParams::new(doc.y)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.fit.display())))?;
    let log_partition = doc.log_partition.ok_or_else(|| {
        CliError::Input(format!(
            "{}: document has no logPartition (partial fit); re-run fit",
            args.fit.display()
        ))
    })?;

    let queries = csvio::read_table(&args.input).map_err(|e| CliError::Input(e.to_string()))?;
    if queries[0].len() != xset.d() {
        return Err(CliError::Input(format!(
            "query points have {} columns but the fit is {}-dimensional",
            queries[0].len(),
            xset.d()
        )));
    }

    let mut rows = Vec::with_capacity(queries.len());
    for q in &queries {
        let density = match tent_evaluate(&xset, params.values(), q).map_err(CliError::from)? {
            TentValue::Value(h) => (h - log_partition).exp(),
            TentValue::OutsideHull => 0.0,
        };
        rows.push(vec![density]);
    }
    csvio::write_table(&args.output, None, rows).map_err(|e| write_failure(&args.output, e))?;
    println!(
        "eval: {} densities -> {}",
        queries.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_sample(args: &SampleArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    ctx.command = "sample";
    ctx.input = args.fit.display().to_string();

    let doc = load_document(&args.fit).map_err(CliError::Input)?;
    let seed = resolve_seed(args.seed, doc.seed)?;
    ctx.seed = Some(seed);
    ctx.config = json!({
        "count": args.count,
        "delta": args.delta,
        "tau": args.tau,
        "walkSteps": args.walk_steps,
        "volumeBackend": args.volume_backend.label(),
        "output": args.output.display().to_string(),
    });

    let xset = SampleSet::new(doc.points).map_err(CliError::from)?;
    let params = TentParams::new(doc.y)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.fit.display())))?;
    let cfg = SamplerConfig {
        delta: args.delta,
        tau: args.tau,
        seed,
        walk_steps: args.walk_steps,
        volume_backend: args.volume_backend.to_core(),
    };
    let decomp = build_decomposition(&xset, params.values(), &cfg).map_err(CliError::from)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SampleStats::default();
    let mut rows = Vec::with_capacity(args.count);
    let mut draw_error = None;
    for _ in 0..args.count {
        match decomp.sample_with_stats(&mut rng, &mut stats) {
            Ok(point) => rows.push(point),
            Err(e) => {
                draw_error = Some(e);
                break;
            }
        }
    }
    let rate = stats.acceptance_rate();
    ctx.acceptance_rate = rate.is_finite().then_some(rate);
    if let Some(e) = draw_error {
        return Err(CliError::from(e));
    }

    csvio::write_table(&args.output, None, rows).map_err(|e| write_failure(&args.output, e))?;
    println!(
        "sample: {} draws, acceptance rate {:.3} -> {}",
        args.count,
        rate,
        args.output.display()
    );
    Ok(())
}

/// What `partition` prints on stdout, one JSON line.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PartitionSummary {
    log_partition: f64,
    /// Certified relative error bound on the normalizing constant.
    rel_err: f64,
    delta: f64,
    tau: f64,
    seed: u64,
}

fn cmd_partition(args: &PartitionArgs, ctx: &mut RunContext) -> Result<(), CliError> {
    ctx.command = "partition";
    let seed = resolve_seed(args.seed, 7)?;
    ctx.seed = Some(seed);
    ctx.config = json!({
        "delta": args.delta,
        "tau": args.tau,
        "walkSteps": args.walk_steps,
        "volumeBackend": args.volume_backend.label(),
    });

    let (xset, heights) = match (&args.fit, &args.input, &args.heights) {
        (Some(fit_path), None, None) => {
            ctx.input = fit_path.display().to_string();
            let doc = load_document(fit_path).map_err(CliError::Input)?;
            (SampleSet::new(doc.points).map_err(CliError::from)?, doc.y)
        }
        (None, Some(points_path), Some(heights_path)) => {
            ctx.input = points_path.display().to_string();
            let xset = read_points(points_path)?;
            let heights =
                csvio::read_column(heights_path).map_err(|e| CliError::Input(e.to_string()))?;
            if heights.len() != xset.n() {
                return Err(CliError::Input(format!(
                    "{} heights for {} points",
                    heights.len(),
                    xset.n()
                )));
            }
            (xset, heights)
        }
        // clap's argument group guarantees exactly one source.
        _ => unreachable!("argument parsing enforces the tent source"),
    };

    let cfg = SamplerConfig {
        delta: args.delta,
        tau: args.tau,
        seed,
        walk_steps: args.walk_steps,
        volume_backend: args.volume_backend.to_core(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (value, rel_err) =
        estimate_log_partition(&xset, &heights, &cfg, &mut rng).map_err(CliError::from)?;
    let summary = PartitionSummary {
        log_partition: value,
        rel_err,
        delta: args.delta,
        tau: args.tau,
        seed,
    };
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(())
}
