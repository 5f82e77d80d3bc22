//! Command-line surface: flag parsing, config resolution, and dispatch.
//!
//! Every subcommand is a pure function of its input files, flags, and
//! seeds: repeated runs emit byte-identical output, and worker threads
//! never change results.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use evalsnr_core::agreement::{agreement_report, TiePolicy};
use evalsnr_core::sample_size::{
    min_checkpoints, within_tolerance_likelihood, MinCheckpointQuery,
};
use evalsnr_core::series::{checkpoint_average, ema, final_window};
use evalsnr_core::spread::SpreadMeasureKind;
use evalsnr_core::synth::{CurveConfig, NoiseMode};

use crate::analysis::{
    noise_estimate, snr_report, BpbAggregation, InstanceMetric, NoiseKind,
};
use crate::config::FileConfig;
use crate::error::DataError;
use crate::ingest::{
    load_store, write_measurements_csv, write_measurements_jsonl, write_models_csv, FieldMap,
};
use crate::interventions::{
    early_stop_sweep, greedy_subtask_filter, metric_comparison, random_order_baseline,
    subsample_instances, ComparisonOptions, FilterOptions, LadderSpec,
};
use crate::pairing::{paired_scores_from_store, resample_decision_accuracy, Scoring};
use crate::report::{
    emit, render_correlation, render_resample, Cell, CorrelationReport, OutputFormat, Table,
};
use crate::scaling::{fit_and_predict, fit_chain, FitReport};
use crate::store::{EvalStore, Measurement};
use crate::synth::{synth_curve, synth_ladder, synth_population, LadderConfig, PopulationSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
enum CliError {
    /// Bad invocation: wrong flags, unknown config keys, unparseable
    /// option values. Exit 2.
    Usage(String),
    /// The inputs themselves are missing, malformed, or statistically
    /// unusable. Exit 1.
    Data(DataError),
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e)
    }
}

impl From<evalsnr_core::Error> for CliError {
    fn from(e: evalsnr_core::Error) -> Self {
        CliError::Data(DataError::Kernel(e))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "evalsnr",
    version,
    about = "Reliability statistics for language-model benchmarks: signal, noise, rank agreement, and scaling-law prediction over logged evaluation scores."
)]
struct Cli {
    /// key=value config file backing the shared flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Measurement file (.csv or .jsonl); repeatable.
    #[arg(long, global = true)]
    input: Vec<PathBuf>,

    /// Model metadata CSV.
    #[arg(long, global = true)]
    models: Option<PathBuf>,

    /// Per-instance JSONL file; repeatable.
    #[arg(long, global = true)]
    instances: Vec<PathBuf>,

    /// Benchmark to analyze; most commands default to every benchmark.
    #[arg(long, global = true)]
    benchmark: Option<String>,

    /// Metric column to analyze.
    #[arg(long, global = true)]
    metric: Option<String>,

    /// Final-checkpoint window size (defaults: 5, or 30 where the window
    /// feeds a target-scale noise estimate).
    #[arg(long = "window-n", global = true)]
    window_n: Option<usize>,

    /// Checkpoints averaged by avg_* scoring variants.
    #[arg(long = "avg-k", global = true)]
    avg_k: Option<usize>,

    /// EMA smoothing factor in (0, 1].
    #[arg(long = "ema-alpha", global = true)]
    ema_alpha: Option<f64>,

    /// RNG seed for all randomized procedures.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (atomic write); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Worker threads for resampling and baselines (never affects output
    /// bytes).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Header-rename file (canonical=external) for foreign column names.
    #[arg(long = "field-map", global = true)]
    field_map: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load every input file, validate it, and summarize the store.
    Validate,
    /// Signal, noise, and signal-to-noise ratio per benchmark.
    Snr(SnrArgs),
    /// Noise of the selected models' curves under a chosen estimator.
    Noise(NoiseArgs),
    /// Score spread across the population under a chosen measure.
    Signal(SignalArgs),
    /// Small-to-large rank agreement (decision accuracy, tau, rho).
    DecisionAcc(DecisionArgs),
    /// Fit the task-loss power law, optionally chained with a sigmoid.
    ScalingFit(ScalingFitArgs),
    /// Fit on a ladder and forecast a held-out target model.
    ScalingPredict(ScalingPredictArgs),
    /// Rank subtasks by SNR and score each greedy prefix.
    FilterSubtasks(FilterArgs),
    /// Final score vs mean of the last k checkpoints, per model.
    Average(AverageArgs),
    /// Emit EMA-smoothed curves in the measurement schema.
    Ema(EmaArgs),
    /// Decision accuracy of stopping at each shared step, raw vs smoothed.
    EarlyStop(EarlyStopArgs),
    /// Smallest checkpoint count meeting a std tolerance at a confidence.
    MinN(MinNArgs),
    /// Empirical likelihood that n checkpoints estimate window noise.
    WithinTolerance(WithinToleranceArgs),
    /// Decision-accuracy distribution under final-window resampling.
    Resample(ResampleArgs),
    /// Re-aggregate a benchmark over a fixed random instance subset.
    Subsample(SubsampleArgs),
    /// The same reliability readout under two metrics, side by side.
    MetricCompare(MetricCompareArgs),
    /// Generate seeded synthetic populations, ladders, or curves.
    Synth(SynthArgs),
    /// Correlate two per-benchmark report columns into plot data.
    Correlate(CorrelateArgs),
}

/// Model selection shared by the population-level commands.
#[derive(Args, Debug, Clone)]
struct SelectArgs {
    /// Comma-separated model ids forming the score population
    /// (default: every model).
    #[arg(long, value_delimiter = ',')]
    population: Vec<String>,

    /// Comma-separated model ids whose curves estimate noise
    /// (default: the population).
    #[arg(long = "noise-models", value_delimiter = ',')]
    noise_models: Vec<String>,

    /// Select the population by training-FLOPs proximity instead of ids.
    #[arg(long = "target-flops", conflicts_with = "population")]
    target_flops: Option<f64>,

    /// Relative FLOPs tolerance for --target-flops.
    #[arg(long = "flops-tol", default_value_t = 0.1)]
    flops_tol: f64,

    /// Restrict to one subtask instead of the whole benchmark.
    #[arg(long)]
    subtask: Option<String>,
}

#[derive(Args, Debug)]
struct SnrArgs {
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Estimator: final_n_rel_std, total_variation, seed, or data_order.
    #[arg(long, default_value = "final_n_rel_std")]
    kind: String,
}

#[derive(Args, Debug)]
struct SignalArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Spread measure (e.g. rel_dispersion, rel_std, gini_coefficient).
    #[arg(long, default_value = "rel_dispersion")]
    measure: String,
}

#[derive(Args, Debug)]
struct DecisionArgs {
    /// Comma-separated small-scale model ids.
    #[arg(long, value_delimiter = ',', required = true)]
    small: Vec<String>,
    /// Comma-separated large-scale model ids (paired to small by group).
    #[arg(long, value_delimiter = ',', required = true)]
    large: Vec<String>,
    /// Scoring variant: final, avg_pred, avg_target, or avg_both.
    #[arg(long, default_value = "final")]
    scoring: String,
    /// Tie handling: half_credit or error.
    #[arg(long, default_value = "half_credit")]
    ties: String,
    #[arg(long)]
    subtask: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingFitArgs {
    /// Comma-separated ladder model ids (default: every model).
    #[arg(long, value_delimiter = ',')]
    train: Vec<String>,
    /// Metric fitted by the power-law stage.
    #[arg(long = "loss-metric", default_value = "loss")]
    loss_metric: String,
    /// Huber delta for the power-law objective.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    subtask: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingPredictArgs {
    #[command(flatten)]
    fit: ScalingFitArgs,
    /// Held-out model to forecast.
    #[arg(long, required = true)]
    target: String,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Small-scale ids for the per-prefix decision-accuracy column.
    #[arg(long, value_delimiter = ',')]
    small: Vec<String>,
    /// Large-scale ids paired with --small.
    #[arg(long, value_delimiter = ',')]
    large: Vec<String>,
    /// Models whose prefix-aggregate noise fills the target_noise column.
    #[arg(long = "target-models", value_delimiter = ',')]
    target_models: Vec<String>,
    /// Window for the target-noise column.
    #[arg(long = "target-window")]
    target_window: Option<usize>,
    /// Random-order trials behind the baseline columns; 0 disables.
    #[arg(long = "baseline-trials", default_value_t = 10)]
    baseline_trials: usize,
    #[arg(long, default_value = "half_credit")]
    ties: String,
}

#[derive(Args, Debug)]
struct AverageArgs {
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Args, Debug)]
struct EmaArgs {
    #[command(flatten)]
    select: SelectArgs,
}

#[derive(Args, Debug)]
struct EarlyStopArgs {
    #[command(flatten)]
    select: SelectArgs,
    #[arg(long, default_value = "half_credit")]
    ties: String,
}

#[derive(Args, Debug)]
struct MinNArgs {
    /// Relative tolerances on the noise estimate.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.5, 1.0])]
    tolerances: Vec<f64>,
    /// Required probabilities of landing within tolerance.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.90, 0.95, 0.99])]
    confidences: Vec<f64>,
}

#[derive(Args, Debug)]
struct WithinToleranceArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// Subset sizes n to test against the full window.
    #[arg(long = "subset-n", value_delimiter = ',', default_values_t = vec![5usize, 10, 20])]
    subset_n: Vec<usize>,
    /// Relative tolerance on the subset's sample std.
    #[arg(long, default_value_t = 1.0)]
    tolerance: f64,
    /// Random subsets drawn per (model, n).
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
}

#[derive(Args, Debug)]
struct ResampleArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    small: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    large: Vec<String>,
    /// Resampled decision-accuracy draws.
    #[arg(long, default_value_t = 1000)]
    draws: usize,
    #[arg(long, default_value = "half_credit")]
    ties: String,
    #[arg(long)]
    subtask: Option<String>,
}

#[derive(Args, Debug)]
struct SubsampleArgs {
    /// Instances kept (default: all of them, i.e. pure re-aggregation).
    #[arg(long)]
    m: Option<usize>,
    /// Instance metric: primary or bpb.
    #[arg(long = "instance-metric", default_value = "primary")]
    instance_metric: String,
    /// bpb aggregation: micro (corpus-level) or macro (mean of per-instance).
    #[arg(long, default_value = "micro")]
    aggregation: String,
}

#[derive(Args, Debug)]
struct MetricCompareArgs {
    #[command(flatten)]
    select: SelectArgs,
    /// First metric column (defaults to --metric).
    #[arg(long = "metric-a")]
    metric_a: Option<String>,
    /// Second metric column.
    #[arg(long = "metric-b", required = true)]
    metric_b: String,
    #[arg(long, value_delimiter = ',')]
    small: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    large: Vec<String>,
    /// Ladder ids enabling the scaling_error column.
    #[arg(long, value_delimiter = ',')]
    train: Vec<String>,
    /// Held-out model forecast by the scaling_error column.
    #[arg(long)]
    target: Option<String>,
    /// Metric fitted by the power-law stage of the scaling_error column.
    #[arg(long = "loss-metric", default_value = "loss")]
    loss_metric: String,
    #[arg(long, default_value = "half_credit")]
    ties: String,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// What to generate: population, ladder, or curve.
    #[arg(long, default_value = "population")]
    mode: String,
    /// Directory receiving models.csv and measurements.csv.
    #[arg(long = "out-dir", required = true)]
    out_dir: PathBuf,
    /// Model pairs in population mode.
    #[arg(long, default_value_t = 8)]
    groups: usize,
    /// Checkpoints per curve.
    #[arg(long, default_value_t = 40)]
    steps: u32,
    /// Relative (or absolute, with --noise-mode additive) noise scale.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Ladder parameter grid.
    #[arg(long = "grid-params", value_delimiter = ',')]
    grid_params: Vec<u64>,
    /// Ladder token grid.
    #[arg(long = "grid-tokens", value_delimiter = ',')]
    grid_tokens: Vec<u64>,
    /// Held-out target scale of the ladder.
    #[arg(long = "target-params", default_value_t = 3_000_000_000)]
    target_params: u64,
    #[arg(long = "target-tokens", default_value_t = 60_000_000_000)]
    target_tokens: u64,
    /// Curve-mode trend ceiling.
    #[arg(long, default_value_t = 0.6)]
    asymptote: f64,
    /// Curve-mode initial deficit.
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    /// Curve-mode decay exponent.
    #[arg(long, default_value_t = 0.7)]
    decay: f64,
    /// multiplicative or additive noise in curve mode.
    #[arg(long = "noise-mode", default_value = "multiplicative")]
    noise_mode: String,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// CSV holding the x column, keyed by a benchmark column.
    #[arg(long = "x-file", required = true)]
    x_file: PathBuf,
    /// CSV holding the y column, keyed by a benchmark column.
    #[arg(long = "y-file", required = true)]
    y_file: PathBuf,
    #[arg(long, default_value = "snr")]
    x: String,
    #[arg(long, default_value = "decision_accuracy")]
    y: String,
    /// log10-transform x: auto (on for snr columns), on, or off.
    #[arg(long = "log-x", default_value = "auto")]
    log_x: String,
}

/// Shared options after merging flags over config over defaults.
#[derive(Debug)]
struct Resolved {
    measurements: Vec<PathBuf>,
    models: Option<PathBuf>,
    instances: Vec<PathBuf>,
    benchmark: Option<String>,
    metric: String,
    window_n: Option<usize>,
    avg_k: usize,
    ema_alpha: f64,
    seed: u64,
    out: Option<PathBuf>,
    format: OutputFormat,
    threads: usize,
    field_map: Option<PathBuf>,
}

impl Resolved {
    fn window(&self, default: usize) -> usize {
        self.window_n.unwrap_or(default)
    }

    fn require_benchmark(&self) -> Result<&str, CliError> {
        self.benchmark
            .as_deref()
            .ok_or_else(|| CliError::Usage("--benchmark is required for this command".into()))
    }
}

fn parse_config_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::Usage(format!("config key {key}: bad value {raw:?}: {e}")))
}

fn resolve(cli: &Cli) -> Result<Resolved, CliError> {
    let config = match &cli.config {
        None => FileConfig::empty(),
        Some(path) => FileConfig::load(path).map_err(CliError::Usage)?,
    };
    let paths_from = |key: &str| -> Vec<PathBuf> {
        config
            .get(key)
            .map(|v| v.split(',').map(|s| PathBuf::from(s.trim())).collect())
            .unwrap_or_default()
    };
    let measurements = if cli.input.is_empty() { paths_from("input") } else { cli.input.clone() };
    let instances =
        if cli.instances.is_empty() { paths_from("instances") } else { cli.instances.clone() };
    let models = cli.models.clone().or_else(|| config.get("models").map(PathBuf::from));
    let benchmark =
        cli.benchmark.clone().or_else(|| config.get("benchmark").map(String::from));
    let metric = cli
        .metric
        .clone()
        .or_else(|| config.get("metric").map(String::from))
        .unwrap_or_else(|| "primary".into());
    let window_n = match (cli.window_n, config.get("window_n")) {
        (Some(v), _) => Some(v),
        (None, Some(raw)) => Some(parse_config_value("window_n", raw)?),
        (None, None) => None,
    };
    let avg_k = match (cli.avg_k, config.get("avg_k")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_config_value("avg_k", raw)?,
        (None, None) => 5,
    };
    let ema_alpha = match (cli.ema_alpha, config.get("ema_alpha")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_config_value("ema_alpha", raw)?,
        (None, None) => 0.1,
    };
    let seed = match (cli.seed, config.get("seed")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_config_value("seed", raw)?,
        (None, None) => 0,
    };
    let threads = match (cli.threads, config.get("threads")) {
        (Some(v), _) => v,
        (None, Some(raw)) => parse_config_value("threads", raw)?,
        (None, None) => 1,
    };
    let out = cli.out.clone().or_else(|| config.get("out").map(PathBuf::from));
    let format = match cli.format.as_deref().or_else(|| config.get("format")) {
        None => OutputFormat::Csv,
        Some(raw) => OutputFormat::parse(raw).map_err(CliError::Usage)?,
    };
    let field_map =
        cli.field_map.clone().or_else(|| config.get("field_map").map(PathBuf::from));
    Ok(Resolved {
        measurements,
        models,
        instances,
        benchmark,
        metric,
        window_n,
        avg_k,
        ema_alpha,
        seed,
        out,
        format,
        threads,
        field_map,
    })
}

fn load(resolved: &Resolved) -> Result<EvalStore, CliError> {
    let models = resolved
        .models
        .as_deref()
        .ok_or_else(|| CliError::Usage("--models <file> is required for this command".into()))?;
    if resolved.measurements.is_empty() && resolved.instances.is_empty() {
        return Err(CliError::Usage(
            "at least one --input or --instances file is required for this command".into(),
        ));
    }
    let map = match &resolved.field_map {
        None => FieldMap::default(),
        Some(path) => FieldMap::load(path)?,
    };
    let measurement_refs: Vec<&Path> = resolved.measurements.iter().map(PathBuf::as_path).collect();
    let instance_refs: Vec<&Path> = resolved.instances.iter().map(PathBuf::as_path).collect();
    Ok(load_store(models, &measurement_refs, &instance_refs, &map)?)
}

/// Population per the selection flags: explicit ids, a FLOPs class, or
/// every model.
fn resolve_population(store: &EvalStore, select: &SelectArgs) -> Result<Vec<String>, CliError> {
    let population = if !select.population.is_empty() {
        for id in &select.population {
            store.require_model(id)?;
        }
        select.population.clone()
    } else if let Some(flops) = select.target_flops {
        let picked = store.select_population(flops, select.flops_tol)?;
        if picked.is_empty() {
            return Err(CliError::Data(DataError::Invalid(format!(
                "no model within {:.0}% of {flops:e} FLOPs",
                select.flops_tol * 100.0
            ))));
        }
        picked
    } else {
        store.model_ids()
    };
    Ok(population)
}

fn resolve_noise_models(
    store: &EvalStore,
    select: &SelectArgs,
    population: &[String],
) -> Result<Vec<String>, CliError> {
    if select.noise_models.is_empty() {
        return Ok(population.to_vec());
    }
    for id in &select.noise_models {
        store.require_model(id)?;
    }
    Ok(select.noise_models.clone())
}

/// Benchmarks to iterate: the requested one, or all of them.
fn benchmarks_for(store: &EvalStore, resolved: &Resolved) -> Result<Vec<String>, CliError> {
    match &resolved.benchmark {
        Some(b) => {
            if !store.benchmarks().contains(b) {
                return Err(CliError::Data(DataError::Invalid(format!(
                    "benchmark {b:?} not present in the inputs"
                ))));
            }
            Ok(vec![b.clone()])
        }
        None => {
            let all = store.benchmarks();
            if all.is_empty() {
                return Err(CliError::Data(DataError::Invalid(
                    "inputs contain no benchmarks".into(),
                )));
            }
            Ok(all.into_iter().collect())
        }
    }
}

/// Row label folding an optional subtask into the benchmark column.
fn bench_label(benchmark: &str, subtask: Option<&str>) -> String {
    match subtask {
        None => benchmark.to_string(),
        Some(s) => format!("{benchmark}/{s}"),
    }
}

fn parse_ties(raw: &str) -> Result<TiePolicy, CliError> {
    match raw {
        "half_credit" => Ok(TiePolicy::HalfCredit),
        "error" => Ok(TiePolicy::Error),
        other => Err(CliError::Usage(format!(
            "unknown tie policy {other:?}, expected half_credit or error"
        ))),
    }
}

fn parse_instance_metric(raw: &str) -> Result<InstanceMetric, CliError> {
    match raw {
        "primary" => Ok(InstanceMetric::Primary),
        "bpb" => Ok(InstanceMetric::Bpb),
        other => Err(CliError::Usage(format!(
            "unknown instance metric {other:?}, expected primary or bpb"
        ))),
    }
}

fn parse_aggregation(raw: &str) -> Result<BpbAggregation, CliError> {
    match raw {
        "micro" => Ok(BpbAggregation::Micro),
        "macro" => Ok(BpbAggregation::Macro),
        other => Err(CliError::Usage(format!(
            "unknown aggregation {other:?}, expected micro or macro"
        ))),
    }
}

/// Entry point used by main and by the integration tests.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let resolved = resolve(cli)?;
    match &cli.command {
        Command::Validate => cmd_validate(&resolved),
        Command::Snr(args) => cmd_snr(&resolved, args),
        Command::Noise(args) => cmd_noise(&resolved, args),
        Command::Signal(args) => cmd_signal(&resolved, args),
        Command::DecisionAcc(args) => cmd_decision_acc(&resolved, args),
        Command::ScalingFit(args) => cmd_scaling_fit(&resolved, args),
        Command::ScalingPredict(args) => cmd_scaling_predict(&resolved, args),
        Command::FilterSubtasks(args) => cmd_filter_subtasks(&resolved, args),
        Command::Average(args) => cmd_average(&resolved, args),
        Command::Ema(args) => cmd_ema(&resolved, args),
        Command::EarlyStop(args) => cmd_early_stop(&resolved, args),
        Command::MinN(args) => cmd_min_n(&resolved, args),
        Command::WithinTolerance(args) => cmd_within_tolerance(&resolved, args),
        Command::Resample(args) => cmd_resample(&resolved, args),
        Command::Subsample(args) => cmd_subsample(&resolved, args),
        Command::MetricCompare(args) => cmd_metric_compare(&resolved, args),
        Command::Synth(args) => cmd_synth(&resolved, args),
        Command::Correlate(args) => cmd_correlate(&resolved, args),
    }
}

fn cmd_validate(resolved: &Resolved) -> Result<(), CliError> {
    let store = load(resolved)?;
    let mut table =
        Table::new(vec!["models", "measurements", "instances", "benchmarks", "metrics"]);
    let metrics: std::collections::BTreeSet<String> = store
        .benchmarks()
        .iter()
        .flat_map(|b| store.metrics_of(b))
        .collect();
    table.push(vec![
        Cell::Usize(store.n_models()),
        Cell::Usize(store.n_measurements()),
        Cell::Usize(store.n_instances()),
        Cell::Usize(store.benchmarks().len()),
        Cell::Usize(metrics.len()),
    ]);
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_snr(resolved: &Resolved, args: &SnrArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let population = resolve_population(&store, &args.select)?;
    let noise_models = resolve_noise_models(&store, &args.select, &population)?;
    let window = resolved.window(5);
    let subtask = args.select.subtask.as_deref();
    let mut table = Table::new(vec![
        "benchmark",
        "metric",
        "signal",
        "noise",
        "snr",
        "window_n",
        "population_size",
    ]);
    for bench in benchmarks_for(&store, resolved)? {
        let report = snr_report(
            &store,
            &population,
            &noise_models,
            &bench,
            subtask,
            &resolved.metric,
            window,
        )?;
        table.push(vec![
            Cell::Str(bench_label(&bench, subtask)),
            Cell::Str(resolved.metric.clone()),
            Cell::F64(report.signal),
            Cell::F64(report.noise),
            Cell::Snr(report.snr),
            Cell::Usize(window),
            Cell::Usize(report.population.len()),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_noise(resolved: &Resolved, args: &NoiseArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let kind = NoiseKind::parse(&args.kind).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown noise kind {:?}, expected one of final_n_rel_std, total_variation, seed, data_order",
            args.kind
        ))
    })?;
    let population = resolve_population(&store, &args.select)?;
    let noise_models = resolve_noise_models(&store, &args.select, &population)?;
    let window = resolved.window(5);
    let subtask = args.select.subtask.as_deref();
    let mut table = Table::new(vec!["benchmark", "metric", "kind", "noise", "window_n", "models"]);
    for bench in benchmarks_for(&store, resolved)? {
        let estimate = noise_estimate(
            &store,
            kind,
            &noise_models,
            &bench,
            subtask,
            &resolved.metric,
            window,
        )?;
        table.push(vec![
            Cell::Str(bench_label(&bench, subtask)),
            Cell::Str(resolved.metric.clone()),
            Cell::Str(kind.name().into()),
            Cell::F64(estimate.value),
            Cell::Usize(window),
            Cell::Usize(estimate.model_ids.len()),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_signal(resolved: &Resolved, args: &SignalArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let measure = SpreadMeasureKind::parse(&args.measure).ok_or_else(|| {
        let known: Vec<&str> = SpreadMeasureKind::ALL.iter().map(|k| k.name()).collect();
        CliError::Usage(format!(
            "unknown spread measure {:?}, expected one of {}",
            args.measure,
            known.join(", ")
        ))
    })?;
    let population = resolve_population(&store, &args.select)?;
    let subtask = args.select.subtask.as_deref();
    let mut table =
        Table::new(vec!["benchmark", "metric", "measure", "signal", "population_size"]);
    for bench in benchmarks_for(&store, resolved)? {
        let value = crate::analysis::signal_spread(
            &store,
            measure,
            &population,
            &bench,
            subtask,
            &resolved.metric,
        )?;
        table.push(vec![
            Cell::Str(bench_label(&bench, subtask)),
            Cell::Str(resolved.metric.clone()),
            Cell::Str(measure.name().into()),
            Cell::F64(value),
            Cell::Usize(population.len()),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn scoring_pair(variant: &str, k: usize) -> Result<(Scoring, Scoring, &'static str), CliError> {
    match variant {
        "final" => Ok((Scoring::Final, Scoring::Final, "final")),
        "avg_pred" => Ok((Scoring::AvgLastK(k), Scoring::Final, "avg_pred")),
        "avg_target" => Ok((Scoring::Final, Scoring::AvgLastK(k), "avg_target")),
        "avg_both" => Ok((Scoring::AvgLastK(k), Scoring::AvgLastK(k), "avg_both")),
        other => Err(CliError::Usage(format!(
            "unknown scoring variant {other:?}, expected final, avg_pred, avg_target, or avg_both"
        ))),
    }
}

fn cmd_decision_acc(resolved: &Resolved, args: &DecisionArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let (small_scoring, large_scoring, variant) = scoring_pair(&args.scoring, resolved.avg_k)?;
    let ties = parse_ties(&args.ties)?;
    let subtask = args.subtask.as_deref();
    let mut table = Table::new(vec![
        "benchmark",
        "metric",
        "scoring_variant",
        "decision_accuracy",
        "kendall_tau",
        "spearman_rho",
        "n_pairs",
        "tie_count",
    ]);
    for bench in benchmarks_for(&store, resolved)? {
        let paired = paired_scores_from_store(
            &store,
            &args.small,
            &args.large,
            &bench,
            subtask,
            &resolved.metric,
            small_scoring,
            large_scoring,
        )?;
        let report = agreement_report(&paired, ties).map_err(DataError::from)?;
        table.push(vec![
            Cell::Str(bench_label(&bench, subtask)),
            Cell::Str(resolved.metric.clone()),
            Cell::Str(variant.into()),
            Cell::F64(report.decision_accuracy),
            Cell::F64(report.kendall_tau),
            Cell::F64(report.spearman_rho),
            Cell::U64(report.n_pairs),
            Cell::U64(report.tie_count),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

const SCALING_COLUMNS: [&str; 17] = [
    "benchmark",
    "metric",
    "A",
    "B",
    "E",
    "alpha",
    "beta",
    "a",
    "b",
    "k",
    "L0",
    "fit_loss",
    "predicted",
    "actual",
    "rel_error",
    "target_noise",
    "within_noise_flag",
];

/// The shared left half of a scaling fit/predict row. The fit_loss column
/// reports the stage producing the predicted quantity: the sigmoid when
/// one is chained, the power law otherwise.
fn scaling_row_prefix(benchmark: &str, subtask: Option<&str>, fit: &FitReport) -> Vec<Cell> {
    let metric_name = fit.metric.clone().unwrap_or_else(|| fit.loss_metric.clone());
    let mut row = vec![
        Cell::Str(bench_label(benchmark, subtask)),
        Cell::Str(metric_name),
        Cell::F64(fit.power.param_coef),
        Cell::F64(fit.power.token_coef),
        Cell::F64(fit.power.irreducible),
        Cell::F64(fit.power.param_exp),
        Cell::F64(fit.power.token_exp),
    ];
    match &fit.sigmoid {
        Some(s) => {
            row.push(Cell::F64(s.amplitude));
            row.push(Cell::F64(s.offset));
            row.push(Cell::F64(s.steepness));
            row.push(Cell::F64(s.midpoint));
            row.push(Cell::F64(s.fit_loss));
        }
        None => {
            row.extend([Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]);
            row.push(Cell::F64(fit.power.fit_loss));
        }
    }
    row
}

fn train_ids_or_all(
    store: &EvalStore,
    train: &[String],
    exclude: Option<&str>,
) -> Result<Vec<String>, CliError> {
    if !train.is_empty() {
        for id in train {
            store.require_model(id)?;
        }
        return Ok(train.to_vec());
    }
    let mut ids = store.model_ids();
    if let Some(skip) = exclude {
        ids.retain(|id| id != skip);
    }
    if ids.is_empty() {
        return Err(CliError::Data(DataError::Invalid("no training models left".into())));
    }
    Ok(ids)
}

/// The sigmoid stage is fitted only when the analysis metric differs
/// from the loss metric; asking for the loss metric itself means the
/// power law is the whole chain.
fn chained_metric<'a>(resolved: &'a Resolved, loss_metric: &str) -> Option<&'a str> {
    if resolved.metric == loss_metric {
        None
    } else {
        Some(resolved.metric.as_str())
    }
}

fn cmd_scaling_fit(resolved: &Resolved, args: &ScalingFitArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let train = train_ids_or_all(&store, &args.train, None)?;
    let subtask = args.subtask.as_deref();
    let metric = chained_metric(resolved, &args.loss_metric);
    let mut table = Table::new(SCALING_COLUMNS.to_vec());
    for bench in benchmarks_for(&store, resolved)? {
        let fit = fit_chain(
            &store,
            &train,
            &bench,
            subtask,
            &args.loss_metric,
            metric,
            Scoring::Final,
            args.delta,
        )?;
        let mut row = scaling_row_prefix(&bench, subtask, &fit);
        row.extend([Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]);
        table.push(row);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_scaling_predict(resolved: &Resolved, args: &ScalingPredictArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    store.require_model(&args.target)?;
    let train = train_ids_or_all(&store, &args.fit.train, Some(&args.target))?;
    if train.iter().any(|id| id == &args.target) {
        return Err(CliError::Usage(format!(
            "target {:?} cannot also be a training model",
            args.target
        )));
    }
    let subtask = args.fit.subtask.as_deref();
    let metric = chained_metric(resolved, &args.fit.loss_metric);
    let window = resolved.window(30);
    let mut table = Table::new(SCALING_COLUMNS.to_vec());
    for bench in benchmarks_for(&store, resolved)? {
        let prediction = fit_and_predict(
            &store,
            &train,
            &args.target,
            &bench,
            subtask,
            &args.fit.loss_metric,
            metric,
            Scoring::Final,
            window,
            args.fit.delta,
        )?;
        let mut row = scaling_row_prefix(&bench, subtask, &prediction.fit);
        row.extend([
            Cell::F64(prediction.predicted),
            Cell::F64(prediction.actual),
            Cell::F64(prediction.rel_error),
            Cell::F64(prediction.noise_bound),
            Cell::Bool(prediction.within_noise),
        ]);
        table.push(row);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_filter_subtasks(resolved: &Resolved, args: &FilterArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let benchmark = resolved.require_benchmark()?;
    let population = resolve_population(&store, &args.select)?;
    let noise_models = resolve_noise_models(&store, &args.select, &population)?;
    let ties = parse_ties(&args.ties)?;
    let window = resolved.window(5);
    if args.small.is_empty() != args.large.is_empty() {
        return Err(CliError::Usage(
            "--small and --large must be given together".into(),
        ));
    }
    let options = FilterOptions {
        small_ids: (!args.small.is_empty()).then_some(args.small.as_slice()),
        large_ids: (!args.large.is_empty()).then_some(args.large.as_slice()),
        target_ids: (!args.target_models.is_empty()).then_some(args.target_models.as_slice()),
        target_window: args.target_window.unwrap_or(30),
        ties,
    };
    let trace = greedy_subtask_filter(
        &store,
        benchmark,
        &population,
        &noise_models,
        &resolved.metric,
        window,
        options,
    )?;
    let baseline = if args.baseline_trials == 0 {
        None
    } else {
        if args.baseline_trials == 1 {
            eprintln!("note: baseline std is 0 by convention with a single trial");
        }
        Some(random_order_baseline(
            &store,
            benchmark,
            &population,
            &noise_models,
            &resolved.metric,
            window,
            args.baseline_trials,
            resolved.seed,
            resolved.threads,
        )?)
    };
    let mut table = Table::new(vec![
        "prefix_len",
        "subtask_added",
        "snr",
        "decision_accuracy",
        "target_noise",
        "baseline_mean_snr",
        "baseline_std_snr",
    ]);
    for (i, p) in trace.prefixes.iter().enumerate() {
        table.push(vec![
            Cell::Usize(p.len),
            Cell::Str(p.subtask_added.clone()),
            Cell::Snr(p.snr),
            Cell::opt_f64(p.decision_accuracy),
            Cell::opt_f64(p.target_noise),
            Cell::opt_f64(baseline.as_ref().map(|b| b.mean_snr[i])),
            Cell::opt_f64(baseline.as_ref().map(|b| b.std_snr[i])),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_average(resolved: &Resolved, args: &AverageArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let population = resolve_population(&store, &args.select)?;
    let subtask = args.select.subtask.as_deref();
    let k = resolved.avg_k;
    let mut table =
        Table::new(vec!["benchmark", "metric", "model_id", "k", "final", "average"]);
    for bench in benchmarks_for(&store, resolved)? {
        for id in &population {
            let curve = store.require_curve(id, &bench, subtask, &resolved.metric)?;
            let final_score = curve.last().expect("require_curve rejects empty").1;
            let average = checkpoint_average(&curve, k).map_err(|_| {
                DataError::Invalid(format!(
                    "model {id:?} has {} checkpoints, fewer than k {k}",
                    curve.len()
                ))
            })?;
            table.push(vec![
                Cell::Str(bench_label(&bench, subtask)),
                Cell::Str(resolved.metric.clone()),
                Cell::Str(id.clone()),
                Cell::Usize(k),
                Cell::F64(final_score),
                Cell::F64(average),
            ]);
        }
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_ema(resolved: &Resolved, args: &EmaArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let population = resolve_population(&store, &args.select)?;
    let subtask = args.select.subtask.as_deref();
    let alpha = resolved.ema_alpha;
    let mut rows: Vec<Measurement> = Vec::new();
    for bench in benchmarks_for(&store, resolved)? {
        for id in &population {
            let curve = store.require_curve(id, &bench, subtask, &resolved.metric)?;
            let smoothed = ema(&curve, alpha).map_err(DataError::from)?;
            for (step, value) in smoothed {
                rows.push(Measurement {
                    model_id: id.clone(),
                    step,
                    benchmark: bench.clone(),
                    subtask: subtask.map(String::from),
                    metric: resolved.metric.clone(),
                    value,
                });
            }
        }
    }
    let content = match resolved.format {
        OutputFormat::Csv => write_measurements_csv(&rows),
        OutputFormat::Json => write_measurements_jsonl(&rows),
    };
    emit(resolved.out.as_deref(), &content)?;
    Ok(())
}

fn cmd_early_stop(resolved: &Resolved, args: &EarlyStopArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let population = resolve_population(&store, &args.select)?;
    let ties = parse_ties(&args.ties)?;
    let subtask = args.select.subtask.as_deref();
    let mut table = Table::new(vec!["benchmark", "metric", "step", "raw_da", "smoothed_da"]);
    for bench in benchmarks_for(&store, resolved)? {
        let sweep = early_stop_sweep(
            &store,
            &population,
            &bench,
            subtask,
            &resolved.metric,
            resolved.ema_alpha,
            ties,
        )?;
        for (step, raw, smoothed) in sweep {
            table.push(vec![
                Cell::Str(bench_label(&bench, subtask)),
                Cell::Str(resolved.metric.clone()),
                Cell::U64(step),
                Cell::F64(raw),
                Cell::F64(smoothed),
            ]);
        }
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_min_n(resolved: &Resolved, args: &MinNArgs) -> Result<(), CliError> {
    let mut table = Table::new(vec!["k", "alpha", "n"]);
    for &tolerance in &args.tolerances {
        for &confidence in &args.confidences {
            let n = min_checkpoints(&MinCheckpointQuery { tolerance, confidence })
                .map_err(DataError::from)?;
            table.push(vec![Cell::F64(tolerance), Cell::F64(confidence), Cell::Usize(n)]);
        }
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_within_tolerance(resolved: &Resolved, args: &WithinToleranceArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let benchmark = resolved.require_benchmark()?;
    let population = resolve_population(&store, &args.select)?;
    let subtask = args.select.subtask.as_deref();
    let window_n = resolved.window(30);
    let mut table = Table::new(vec!["benchmark", "n", "k", "likelihood"]);
    for &n in &args.subset_n {
        // Mean likelihood across the selected models' windows.
        let mut acc = 0.0;
        for id in &population {
            let curve = store.require_curve(id, benchmark, subtask, &resolved.metric)?;
            let window = final_window(&curve, window_n).map_err(|_| {
                DataError::Invalid(format!(
                    "model {id:?} has {} checkpoints, fewer than window {window_n}",
                    curve.len()
                ))
            })?;
            let estimate =
                within_tolerance_likelihood(&window, n, args.tolerance, args.trials, resolved.seed)
                    .map_err(DataError::from)?;
            acc += estimate.likelihood;
        }
        table.push(vec![
            Cell::Str(bench_label(benchmark, subtask)),
            Cell::Usize(n),
            Cell::F64(args.tolerance),
            Cell::F64(acc / population.len() as f64),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

fn cmd_resample(resolved: &Resolved, args: &ResampleArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let benchmark = resolved.require_benchmark()?;
    let ties = parse_ties(&args.ties)?;
    let summary = resample_decision_accuracy(
        &store,
        &args.small,
        &args.large,
        benchmark,
        args.subtask.as_deref(),
        &resolved.metric,
        resolved.window(5),
        args.draws,
        resolved.seed,
        ties,
        resolved.threads,
    )?;
    emit(resolved.out.as_deref(), &render_resample(&summary, resolved.format))?;
    Ok(())
}

fn cmd_subsample(resolved: &Resolved, args: &SubsampleArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let benchmark = resolved.require_benchmark()?;
    let metric = parse_instance_metric(&args.instance_metric)?;
    let aggregation = parse_aggregation(&args.aggregation)?;
    let m = match args.m {
        Some(m) => m,
        None => store.instance_ids(benchmark).len(),
    };
    let report =
        subsample_instances(&store, benchmark, metric, aggregation, m, resolved.seed)?;
    eprintln!(
        "note: kept {} of {} instances of {benchmark:?}",
        report.subset.len(),
        report.total_instances
    );
    let content = match resolved.format {
        OutputFormat::Csv => write_measurements_csv(&report.rows),
        OutputFormat::Json => write_measurements_jsonl(&report.rows),
    };
    emit(resolved.out.as_deref(), &content)?;
    Ok(())
}

fn cmd_metric_compare(resolved: &Resolved, args: &MetricCompareArgs) -> Result<(), CliError> {
    let store = load(resolved)?;
    let benchmark = resolved.require_benchmark()?;
    let population = resolve_population(&store, &args.select)?;
    let noise_models = resolve_noise_models(&store, &args.select, &population)?;
    let ties = parse_ties(&args.ties)?;
    let subtask = args.select.subtask.as_deref();
    let metric_a = args.metric_a.clone().unwrap_or_else(|| resolved.metric.clone());
    if args.small.is_empty() != args.large.is_empty() {
        return Err(CliError::Usage("--small and --large must be given together".into()));
    }
    if args.train.is_empty() != args.target.is_none() {
        return Err(CliError::Usage("--train and --target must be given together".into()));
    }
    let ladder = match (&args.train, &args.target) {
        (train, Some(target)) if !train.is_empty() => Some(LadderSpec {
            train_ids: train,
            target_id: target,
            loss_metric: &args.loss_metric,
            window_n: resolved.window(30),
        }),
        _ => None,
    };
    let options = ComparisonOptions {
        population: &population,
        noise_models: &noise_models,
        window_n: resolved.window(5),
        small_ids: (!args.small.is_empty()).then_some(args.small.as_slice()),
        large_ids: (!args.large.is_empty()).then_some(args.large.as_slice()),
        ties,
        ladder,
    };
    let (arm_a, arm_b) =
        metric_comparison(&store, benchmark, subtask, &metric_a, &args.metric_b, &options)?;
    let mut table = Table::new(vec![
        "benchmark",
        "metric",
        "signal",
        "noise",
        "snr",
        "decision_accuracy",
        "scaling_error",
    ]);
    for arm in [arm_a, arm_b] {
        table.push(vec![
            Cell::Str(bench_label(benchmark, subtask)),
            Cell::Str(arm.metric.clone()),
            Cell::F64(arm.signal),
            Cell::F64(arm.noise),
            Cell::Snr(arm.snr),
            Cell::opt_f64(arm.decision_accuracy),
            Cell::opt_f64(arm.scaling_error),
        ]);
    }
    emit(resolved.out.as_deref(), &table.render(resolved.format))?;
    Ok(())
}

const DEFAULT_GRID_PARAMS: [u64; 5] =
    [100_000_000, 170_000_000, 300_000_000, 520_000_000, 900_000_000];
const DEFAULT_GRID_TOKENS: [u64; 5] =
    [2_000_000_000, 4_000_000_000, 8_000_000_000, 16_000_000_000, 32_000_000_000];

fn cmd_synth(resolved: &Resolved, args: &SynthArgs) -> Result<(), CliError> {
    let benchmark = resolved.benchmark.clone().unwrap_or_else(|| "bench".into());
    let store = match args.mode.as_str() {
        "population" => synth_population(&PopulationSpec {
            groups: args.groups,
            steps: args.steps,
            noise_scale: args.noise,
            rng_seed: resolved.seed,
            benchmark,
            metric: resolved.metric.clone(),
        })?,
        "ladder" => {
            let params = if args.grid_params.is_empty() {
                DEFAULT_GRID_PARAMS.to_vec()
            } else {
                args.grid_params.clone()
            };
            let tokens = if args.grid_tokens.is_empty() {
                DEFAULT_GRID_TOKENS.to_vec()
            } else {
                args.grid_tokens.clone()
            };
            let mut cfg =
                LadderConfig::grid(params, tokens, args.target_params, args.target_tokens);
            cfg.steps = args.steps;
            cfg.noise_scale = args.noise;
            cfg.rng_seed = resolved.seed;
            cfg.benchmark = benchmark;
            synth_ladder(&cfg)?
        }
        "curve" => {
            let noise_mode = match args.noise_mode.as_str() {
                "multiplicative" => NoiseMode::Multiplicative,
                "additive" => NoiseMode::Additive,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown noise mode {other:?}, expected multiplicative or additive"
                    )))
                }
            };
            synth_curve(
                &CurveConfig {
                    asymptote: args.asymptote,
                    amplitude: args.amplitude,
                    decay_exponent: args.decay,
                    noise_scale: args.noise,
                    steps: args.steps,
                    rng_seed: resolved.seed,
                    noise_mode,
                },
                "m0",
                &benchmark,
                &resolved.metric,
            )
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown synth mode {other:?}, expected population, ladder, or curve"
            )))
        }
    };
    let models: Vec<&crate::store::ModelMeta> = store.models().collect();
    crate::report::atomic_write(&args.out_dir.join("models.csv"), &write_models_csv(&models))?;
    crate::report::atomic_write(
        &args.out_dir.join("measurements.csv"),
        &write_measurements_csv(&store.measurement_rows()),
    )?;
    Ok(())
}

/// Loads a previously emitted per-benchmark table: benchmark label ->
/// named column value.
fn read_keyed_column(
    path: &Path,
    column: &str,
) -> Result<BTreeMap<String, String>, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let bench_idx = find("benchmark").ok_or_else(|| DataError::Malformed {
        path: path.display().to_string(),
        line: 1,
        message: "missing required column benchmark".into(),
    })?;
    let value_idx = find(column).ok_or_else(|| DataError::Malformed {
        path: path.display().to_string(),
        line: 1,
        message: format!("missing required column {column}"),
    })?;
    let mut out = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            line,
            message: e.to_string(),
        })?;
        let bench = record.get(bench_idx).unwrap_or("").to_string();
        let value = record.get(value_idx).unwrap_or("").to_string();
        if out.insert(bench.clone(), value).is_some() {
            return Err(DataError::Malformed {
                path: path.display().to_string(),
                line,
                message: format!("benchmark {bench:?} appears twice"),
            });
        }
    }
    Ok(out)
}

fn cmd_correlate(resolved: &Resolved, args: &CorrelateArgs) -> Result<(), CliError> {
    let xs = read_keyed_column(&args.x_file, &args.x)?;
    let ys = read_keyed_column(&args.y_file, &args.y)?;
    let log_x = match args.log_x.as_str() {
        "on" => true,
        "off" => false,
        "auto" => args.x == "snr",
        other => {
            return Err(CliError::Usage(format!(
                "unknown --log-x value {other:?}, expected auto, on, or off"
            )))
        }
    };
    let mut points: Vec<(String, f64, f64)> = Vec::new();
    for (bench, raw_x) in &xs {
        let Some(raw_y) = ys.get(bench) else {
            eprintln!("note: skipping {bench:?}: absent from {}", args.y_file.display());
            continue;
        };
        let (Ok(mut x), Ok(y)) = (raw_x.parse::<f64>(), raw_y.parse::<f64>()) else {
            eprintln!("note: skipping {bench:?}: non-numeric value ({raw_x:?}, {raw_y:?})");
            continue;
        };
        if log_x {
            x = x.log10();
        }
        if !x.is_finite() || !y.is_finite() {
            eprintln!("note: skipping {bench:?}: non-finite point");
            continue;
        }
        points.push((bench.clone(), x, y));
    }
    if points.len() < 3 {
        return Err(CliError::Data(DataError::Invalid(format!(
            "correlation needs at least 3 benchmarks, found {}",
            points.len()
        ))));
    }
    let col_x: Vec<f64> = points.iter().map(|p| p.1).collect();
    let col_y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let (r, r_squared) =
        evalsnr_core::correlation::pearson_r(&col_x, &col_y).map_err(DataError::from)?;
    let report = CorrelationReport { points, r, r_squared, log_x };
    emit(resolved.out.as_deref(), &render_correlation(&report, resolved.format))?;
    Ok(())
}
