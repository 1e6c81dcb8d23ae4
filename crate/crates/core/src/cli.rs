//! The `pfsuite` command line.
//!
//! Every subcommand prints one JSON document on stdout and, unless `--json`
//! is given, a short summary on stderr. Exit status: 0 on success, 1 for
//! usage and configuration errors, 2 for data and format errors, 3 for model
//! errors (capacity, field width, corrupt image).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::featsel::{
    invariance_filter_with, redundancy_prune, InvarianceStatistic, PerPscEpti,
    DEFAULT_CORRELATION_THRESHOLD, DEFAULT_INVARIANCE_THRESHOLD, DEFAULT_MAX_FEATURES,
};
use crate::hwsim::evaluate_model;
use crate::ingest::{load_dataset, split_train_test, write_jsonl, IngestConfig};
use crate::nodemem::{compile_suite, read_bundle, write_bundle};
use crate::pscsel::{
    build_coverage, greedy_select, TraceIpcTable, DEFAULT_AGNOSTIC_EPSILON, DEFAULT_MAX_CANDIDATES,
    DEFAULT_TOP_K,
};
use crate::replay::{run_replay, summarize_outliers, ReplayOptions, ReplayResult, Side};
use crate::synth::{generate_synthetic, SyntheticSpec};
use crate::train::{
    cross_validate, label_windows, next_window_targets, train_suite, HyperParams, Suite,
    DEFAULT_FOLDS, DEFAULT_LABEL_EPSILON,
};
use crate::types::{Dataset, EptiVector, EventId, PscCatalog};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatselConfig {
    pub invariance_threshold: f64,
    pub statistic: InvarianceStatistic,
    pub correlation_threshold: f64,
    pub max_features: usize,
}

impl Default for FeatselConfig {
    fn default() -> Self {
        FeatselConfig {
            invariance_threshold: DEFAULT_INVARIANCE_THRESHOLD,
            statistic: InvarianceStatistic::default(),
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            max_features: DEFAULT_MAX_FEATURES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PscselConfig {
    pub top_k: usize,
    pub agnostic_epsilon: f64,
    pub max_candidates: usize,
}

impl Default for PscselConfig {
    fn default() -> Self {
        PscselConfig {
            top_k: DEFAULT_TOP_K,
            agnostic_epsilon: DEFAULT_AGNOSTIC_EPSILON,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hyperparams: HyperParams,
    pub label_epsilon: f64,
    pub folds: usize,
    pub train_fraction: f64,
    /// Settings compared by cross-validation; empty means just `hyperparams`.
    pub grid: Vec<HyperParams>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hyperparams: HyperParams::default(),
            label_epsilon: DEFAULT_LABEL_EPSILON,
            folds: DEFAULT_FOLDS,
            train_fraction: 0.1,
            grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub baseline: Option<String>,
    pub initial: Option<String>,
    pub switch_penalty: f64,
    pub outlier_k: usize,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            baseline: None,
            initial: None,
            switch_penalty: 0.0,
            outlier_k: 10,
        }
    }
}

/// Every tunable of the pipeline, loadable from one JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub featsel: FeatselConfig,
    pub pscsel: PscselConfig,
    pub train: TrainConfig,
    pub replay: ReplayConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[derive(Debug, Parser)]
#[command(name = "pfsuite", version, about = "Per-PSC random-forest suite: training, Node MEM compilation and replay")]
pub struct Cli {
    /// Pipeline configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print only the JSON result; no summary on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read window-record files, drop warmup windows and cap each trace.
    Ingest(IngestArgs),
    /// Keep configuration-invariant, mutually uncorrelated events.
    SelectFeatures(SelectFeaturesArgs),
    /// Choose a small PSC catalog covering every non-agnostic trace.
    SelectPsc(SelectPscArgs),
    /// Train one forest per PSC on next-window labels.
    Train(TrainArgs),
    /// Compile a trained suite into a Node MEM bundle.
    Quantize(QuantizeArgs),
    /// Evaluate one E-PTI vector on the hardware model.
    Eval(EvalArgs),
    /// Replay a dataset under the compiled model and static PSCs.
    Simulate(SimulateArgs),
    /// Best and worst per-trace gains as CSV.
    Report(ReportArgs),
    /// Generate a synthetic phase-structured dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub window: Option<u64>,
    #[arg(long, conflicts_with = "no_cap")]
    pub max_windows: Option<usize>,
    /// Keep every post-warmup window.
    #[arg(long)]
    pub no_cap: bool,
}

#[derive(Debug, Args)]
pub struct SelectFeaturesArgs {
    /// Per-PSC E-PTI observations (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Dataset for redundancy pruning of the invariant events.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub correlation: Option<f64>,
    #[arg(long)]
    pub max_features: Option<usize>,
    /// Where to write the selected event names.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectPscArgs {
    /// Trace x PSC mean-IPC table (JSON).
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max: Option<usize>,
    /// Where to write the selected catalog.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Comma-separated event names; default is every dataset event.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// JSON list of event names.
    #[arg(long, conflicts_with = "features")]
    pub features_file: Option<PathBuf>,
    /// JSON list of PSC ids; default is the dataset's catalog.
    #[arg(long)]
    pub pscs: Option<PathBuf>,
    #[arg(long)]
    pub estimators: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Cross-validation folds; 0 or 1 skips cross-validation.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Suite output (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Training windows, for quantization scales.
    #[arg(long)]
    pub train_out: Option<PathBuf>,
    /// Held-out windows.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub suite: PathBuf,
    /// Training windows whose maxima set the threshold scales.
    #[arg(long)]
    pub train: PathBuf,
    /// Bundle directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// E-PTI vector as a JSON array, or `@file`.
    #[arg(long)]
    pub epti: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long)]
    pub switch_penalty: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Best,
    Worst,
    Both,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Replay result written by `simulate`.
    #[arg(long)]
    pub replay: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub side: SideArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

struct Outcome {
    json: Value,
    summary: String,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let quiet = cli.json;
    match dispatch(cli) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON value"));
            if !quiet && !out.summary.is_empty() {
                eprintln!("{}", out.summary);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match cli.command {
        Command::Ingest(a) => ingest(a, &config),
        Command::SelectFeatures(a) => select_features(a, &config),
        Command::SelectPsc(a) => select_psc(a, &config),
        Command::Train(a) => train(a, &config),
        Command::Quantize(a) => quantize(a, &config),
        Command::Eval(a) => eval(a, &config),
        Command::Simulate(a) => simulate(a, &config),
        Command::Report(a) => report(a, &config),
        Command::Synth(a) => synth(a, cli.seed),
    }
}

fn required(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone())
        .ok_or_else(|| Error::Config(format!("no {name} path given (flag or config)")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(ds, &mut buf)?;
    write_file(path, &buf)
}

/// Reads window records that have already been through `ingest`.
pub fn read_dataset(path: &Path, config: &PipelineConfig) -> Result<Dataset> {
    let cfg = IngestConfig {
        warmup_instructions: 0,
        window_size_instructions: config.ingest.window_size_instructions,
        max_windows_per_trace: None,
    };
    load_dataset(&[path.to_path_buf()], &cfg)
}

fn ingest(a: IngestArgs, config: &PipelineConfig) -> Result<Outcome> {
    let mut cfg = config.ingest.clone();
    if let Some(w) = a.warmup {
        cfg.warmup_instructions = w;
    }
    if let Some(w) = a.window {
        cfg.window_size_instructions = w;
    }
    if a.no_cap {
        cfg.max_windows_per_trace = None;
    } else if let Some(m) = a.max_windows {
        cfg.max_windows_per_trace = Some(m);
    }
    let ds = load_dataset(&a.inputs, &cfg)?;
    write_dataset(&a.out, &ds)?;
    let traces = ds.trace_ranges().len();
    Ok(Outcome {
        summary: format!("{} windows from {traces} traces -> {}", ds.len(), a.out.display()),
        json: json!({
            "windows": ds.len(),
            "traces": traces,
            "events": ds.events.names(),
            "pscs": ds.pscs.ids(),
        }),
    })
}

fn select_features(a: SelectFeaturesArgs, config: &PipelineConfig) -> Result<Outcome> {
    let fs_cfg = &config.featsel;
    let input: PerPscEpti = read_json(&a.input)?;
    let report = invariance_filter_with(
        &input,
        a.threshold.unwrap_or(fs_cfg.invariance_threshold),
        fs_cfg.statistic,
    )?;
    let selected: Vec<EventId> = match &a.dataset {
        Some(p) if !report.retained.is_empty() => {
            let ds = read_dataset(p, config)?;
            let candidates = report
                .retained
                .iter()
                .map(|e| {
                    ds.events.lookup(&e.name).ok_or_else(|| {
                        Error::Data(format!("event `{}` is missing from the dataset", e.name))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            redundancy_prune(
                &ds,
                &candidates,
                a.correlation.unwrap_or(fs_cfg.correlation_threshold),
                a.max_features.unwrap_or(fs_cfg.max_features),
            )?
        }
        _ => report.retained.clone(),
    };
    let names: Vec<&str> = selected.iter().map(|e| e.name.as_str()).collect();
    if let Some(out) = &a.out {
        write_json(out, &names)?;
    }
    Ok(Outcome {
        summary: format!(
            "{} of {} events invariant, {} selected",
            report.retained.len(),
            input.events.len(),
            names.len()
        ),
        json: json!({ "invariance": report, "selected": names }),
    })
}

fn select_psc(a: SelectPscArgs, config: &PipelineConfig) -> Result<Outcome> {
    let c = &config.pscsel;
    let table: TraceIpcTable = read_json(&a.table)?;
    let coverage = build_coverage(
        &table,
        a.top_k.unwrap_or(c.top_k),
        a.epsilon.unwrap_or(c.agnostic_epsilon),
    )?;
    let selection = greedy_select(&coverage, a.max.unwrap_or(c.max_candidates))?;
    if let Some(out) = &a.out {
        write_json(out, &selection.catalog)?;
    }
    Ok(Outcome {
        summary: format!(
            "{} PSCs selected; {} traces covered, {} uncovered, {} agnostic",
            selection.catalog.len(),
            selection.covered_by.len(),
            selection.uncovered.len(),
            coverage.agnostic_traces.len()
        ),
        json: json!({
            "catalog": selection.catalog,
            "covered_by": selection.covered_by,
            "uncovered": selection.uncovered,
            "agnostic": coverage.agnostic_traces,
        }),
    })
}

fn train(a: TrainArgs, config: &PipelineConfig) -> Result<Outcome> {
    let tc = &config.train;
    let path = required(a.dataset, &config.paths.dataset, "dataset")?;
    let mut ds = read_dataset(&path, config)?;
    let names: Vec<String> = match &a.features_file {
        Some(f) => read_json(f)?,
        None => a.features.clone(),
    };
    if !names.is_empty() {
        let ids = names
            .iter()
            .map(|n| EventId { index: 0, name: n.clone() })
            .collect::<Vec<_>>();
        ds = ds.project(&ids)?;
    }
    if let Some(p) = &a.pscs {
        let catalog: PscCatalog = read_json(p)?;
        ds = ds.select_pscs(&catalog)?;
    }
    let mut hp = tc.hyperparams;
    if let Some(v) = a.estimators {
        hp.n_estimators = v;
    }
    if let Some(v) = a.depth {
        hp.max_depth = v;
    }
    if let Some(v) = a.budget {
        hp.total_node_budget = v;
    }
    if let Some(v) = a.min_leaf {
        hp.min_leaf_samples = v;
    }
    let epsilon = a.epsilon.unwrap_or(tc.label_epsilon);
    let folds = a.folds.unwrap_or(tc.folds);
    let fraction = a.train_fraction.unwrap_or(tc.train_fraction);
    let seed = config.seed;

    let pairs = next_window_targets(&ds);
    let (train_set, test_set) = split_train_test(&pairs, fraction, seed)?;
    let labels = label_windows(&train_set, epsilon)?;
    let cv = if folds >= 2 {
        let grid = if tc.grid.is_empty() { vec![hp] } else { tc.grid.clone() };
        let report = cross_validate(&train_set, &labels, folds, &grid, seed)?;
        hp = report.best;
        Some(report)
    } else {
        None
    };
    let suite = train_suite(&train_set, &labels, &hp, seed)?;
    write_json(&a.out, &suite)?;
    if let Some(p) = &a.train_out {
        write_dataset(p, &train_set)?;
    }
    if let Some(p) = &a.test_out {
        write_dataset(p, &test_set)?;
    }
    let test_score = if test_set.is_empty() {
        None
    } else {
        let test_labels = label_windows(&test_set, epsilon)?;
        Some(crate::replay::score_pairs(&test_set, Some(&test_labels), &suite)?)
    };
    Ok(Outcome {
        summary: format!(
            "suite of {} forests, {} nodes, depth {}; {} training / {} held-out pairs",
            suite.forests.len(),
            suite.node_count(),
            suite.max_depth(),
            train_set.len(),
            test_set.len()
        ),
        json: json!({
            "suite": a.out,
            "features": suite.features.names(),
            "pscs": suite.pscs,
            "hyperparams": hp,
            "train_pairs": train_set.len(),
            "test_pairs": test_set.len(),
            "node_count": suite.node_count(),
            "max_depth": suite.max_depth(),
            "cross_validation": cv,
            "held_out": test_score,
        }),
    })
}

fn quantize(a: QuantizeArgs, config: &PipelineConfig) -> Result<Outcome> {
    let out = required(a.out, &config.paths.model, "model bundle")?;
    let suite: Suite = read_json(&a.suite)?;
    let train = read_dataset(&a.train, config)?;
    let ids: Vec<EventId> = suite.features.ids();
    let train = train.project(&ids)?;
    let model = compile_suite(&suite, &train)?;
    write_bundle(&out, &model)?;
    Ok(Outcome {
        summary: format!(
            "{} nodes ({} logical bytes, {} in file) -> {}",
            model.image.len(),
            model.image.logical_bytes(),
            model.image.padded_bytes(),
            out.display()
        ),
        json: json!({
            "bundle": out,
            "nodes": model.image.len(),
            "logical_bytes": model.image.logical_bytes(),
            "padded_bytes": model.image.padded_bytes(),
            "rit_entries": model.rit.entries.len(),
            "valid_roots": model.rit.valid_count(),
            "scales": model.meta.scales,
        }),
    })
}

fn eval(a: EvalArgs, config: &PipelineConfig) -> Result<Outcome> {
    let dir = required(a.model, &config.paths.model, "model bundle")?;
    let model = read_bundle(&dir)?;
    let text = match a.epti.strip_prefix('@') {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => a.epti.clone(),
    };
    let values: Vec<f64> = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("E-PTI vector: {e}")))?;
    let d = evaluate_model(&model, &EptiVector::new(values)?)?;
    let psc = model.meta.pscs.ids()[d.class_id].clone();
    Ok(Outcome {
        summary: format!(
            "{psc} (p = {:.4}), {} comparisons, {} memory accesses",
            d.probability, d.state.comparison_count, d.state.memory_access_count
        ),
        json: json!({
            "psc": psc,
            "class_id": d.class_id,
            "probability": d.probability,
            "comparison_count": d.state.comparison_count,
            "memory_access_count": d.state.memory_access_count,
        }),
    })
}

fn simulate(a: SimulateArgs, config: &PipelineConfig) -> Result<Outcome> {
    let rc = &config.replay;
    let ds_path = required(a.dataset, &config.paths.dataset, "dataset")?;
    let dir = required(a.model, &config.paths.model, "model bundle")?;
    let model = read_bundle(&dir)?;
    let ds = read_dataset(&ds_path, config)?.project(&model.meta.features.ids())?;
    let first = model.meta.pscs.ids()[0].clone();
    let initial = a.initial.or_else(|| rc.initial.clone()).unwrap_or_else(|| first.clone());
    let options = ReplayOptions {
        baseline: a.baseline.or_else(|| rc.baseline.clone()).unwrap_or(initial.clone()),
        initial,
        switch_penalty: a.switch_penalty.unwrap_or(rc.switch_penalty),
    };
    let result = run_replay(&ds, &model, &options)?;
    if let Some(out) = &a.out {
        write_json(out, &result)?;
    }
    let g = &result.aggregate;
    Ok(Outcome {
        summary: format!(
            "{} traces, mean gain {:+.2}% over {} (max {:+.2}%, worst {:+.2}%)",
            result.per_trace.len(),
            100.0 * g.mean_gain_vs_baseline,
            result.baseline,
            100.0 * g.max_gain,
            100.0 * g.worst_loss
        ),
        json: serde_json::to_value(&result)?,
    })
}

fn report(a: ReportArgs, config: &PipelineConfig) -> Result<Outcome> {
    let result: ReplayResult = read_json(&a.replay)?;
    let rep = summarize_outliers(&result, a.k.unwrap_or(config.replay.outlier_k))?;
    let side = match a.side {
        SideArg::Best => Side::Best,
        SideArg::Worst => Side::Worst,
        SideArg::Both => Side::Both,
    };
    let csv = rep.to_csv(side);
    let out = a
        .out
        .or_else(|| config.paths.reports.as_ref().map(|d| d.join("outliers.csv")));
    if let Some(p) = &out {
        write_file(p, csv.as_bytes())?;
    }
    Ok(Outcome {
        summary: if rep.truncated {
            format!("only {} traces available per side", rep.best.len())
        } else {
            String::new()
        },
        json: json!({ "report": rep, "csv": csv, "out": out }),
    })
}

fn synth(a: SynthArgs, seed: Option<u64>) -> Result<Outcome> {
    let mut spec: SyntheticSpec = read_json(&a.spec)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let ds = generate_synthetic(&spec)?;
    write_dataset(&a.out, &ds)?;
    Ok(Outcome {
        summary: format!("{} synthetic windows -> {}", ds.len(), a.out.display()),
        json: json!({ "windows": ds.len(), "traces": spec.traces, "out": a.out }),
    })
}
