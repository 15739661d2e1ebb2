//! The `malearn` command line.

mod config;
mod output;
mod render;

pub use config::{load_process, parse_max_features, DataSource, RunArgs, RunConfig};
pub use output::{sidecar, write_atomic, write_json, Manifest, ModelFile, MODEL_FORMAT};
pub use render::{ensemble_text, linear_table, tree_text};

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{
    inject_missingness, load_csv, train_test_indices, write_csv, CsvOptions, Dataset, DatasetManifest, InjectionSpec,
    Mechanism,
};
use crate::error::{Error, Result};
use crate::eval::{sweep, sweep_csv, train_select, Candidate, EvaluationReport, SelectionMode};
use crate::model::{Estimator, HyperParams, Model};
use crate::oddc::{check_tree, generate, verify_zero_reliance, FeatureSpace, OddcCheck, OddcProcess, ZeroRelianceReport};
use crate::tree::{node_missingness, to_dot, DecisionTree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "malearn", version, about = "Missingness-avoiding tree, linear and ensemble models")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select hyperparameters by cross-validation, refit and evaluate on a held-out split.
    Train(RunCommand),
    /// Evaluate every (alpha, max_depth) pair over repeated splits; writes a CSV.
    Sweep(RunCommand),
    /// Sample a dataset from a process with observation rules.
    Synth(SynthArgs),
    /// Add synthetic missingness to a dataset.
    Inject(InjectArgs),
    /// Render a trained model.
    Inspect(InspectArgs),
    /// Check a trained tree model against a process's observation rules.
    VerifyOddc(VerifyArgs),
}

#[derive(Debug, clap::Args)]
pub struct RunCommand {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub args: RunArgs,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    /// `clinic` or a process spec JSON file.
    #[arg(long, default_value = "clinic")]
    pub spec: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct InjectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub label: String,
    /// mcar | mar | mnar
    #[arg(long)]
    pub mechanism: Mechanism,
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub feature_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Debug, clap::Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// CSV used to color tree nodes by missingness.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output file; a directory for ensemble DOT output. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `clinic` or a process spec JSON file.
    #[arg(long, default_value = "clinic")]
    pub spec: String,
    /// Fresh rows drawn to confirm zero reliance.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::MissingColumn(_) | Error::Specification(_) => EXIT_USAGE,
        Error::PropertyViolation(_) => EXIT_VIOLATION,
        _ => EXIT_DATA,
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(c) => cmd_train(c.args.resolve(c.config.as_deref())?),
        Command::Sweep(c) => cmd_sweep(c.args.resolve(c.config.as_deref())?),
        Command::Synth(a) => cmd_synth(&a),
        Command::Inject(a) => cmd_inject(&a),
        Command::Inspect(a) => cmd_inspect(&a),
        Command::VerifyOddc(a) => cmd_verify(&a),
    }
}

#[derive(Debug, Serialize)]
struct FeatureSummary {
    feature: String,
    usage: f64,
    missing_rate: f64,
}

#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    estimator: Estimator,
    mode: SelectionMode,
    chosen_alpha: f64,
    chosen: &'a HyperParams,
    cv_auroc: f64,
    cv_rho: f64,
    split_seed: u64,
    evaluation: &'a EvaluationReport,
    features: Vec<FeatureSummary>,
    candidates: &'a [Candidate<HyperParams>],
}

pub fn cmd_train(cfg: RunConfig) -> Result<()> {
    let data = cfg.load()?;
    let outcome = train_select(&data, &cfg.sweep)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("malearn-train"));

    // Rebuild the training split to record per-feature missingness.
    let idx = train_test_indices(data.labels(), cfg.sweep.test_fraction, outcome.split_seed)?;
    let missing_rates = outcome.preprocessor.transform(&data.select_rows(&idx.train))?.mask.column_rates();

    let chosen = outcome.selection.chosen();
    let names: Vec<String> = outcome.preprocessor.encoder.features.iter().map(|f| f.name.clone()).collect();
    let report = TrainReport {
        estimator: cfg.sweep.estimator,
        mode: outcome.selection.mode,
        chosen_alpha: chosen.params.alpha,
        chosen: &chosen.params,
        cv_auroc: chosen.cv_auroc,
        cv_rho: chosen.cv_rho,
        split_seed: outcome.split_seed,
        evaluation: &outcome.report,
        features: names
            .iter()
            .zip(&outcome.reliance.per_feature_usage)
            .zip(&missing_rates)
            .map(|((f, &usage), &missing_rate)| FeatureSummary { feature: f.clone(), usage, missing_rate })
            .collect(),
        candidates: &outcome.selection.candidates,
    };
    let summary = train_summary(&report);
    let file = ModelFile {
        format: MODEL_FORMAT,
        version: env!("CARGO_PKG_VERSION").into(),
        label: data.label_name().to_string(),
        hyperparams: chosen.params,
        preprocessor: outcome.preprocessor.clone(),
        missing_rates,
        model: outcome.model.clone(),
    };
    write_json(&out.join("model.json"), &file)?;
    write_json(&out.join("report.json"), &report)?;
    write_atomic(&out.join("summary.txt"), summary.as_bytes())?;
    let outputs = ["model.json", "report.json", "summary.txt"].map(String::from).to_vec();
    write_json(&out.join("manifest.json"), &Manifest::new("train", &cfg, outputs))?;
    print!("{summary}");
    Ok(())
}

fn train_summary(r: &TrainReport) -> String {
    let e = r.evaluation;
    let mut s = format!(
        "estimator {} ({} selection), chosen alpha {}\n\
         cv auroc {:.4}, cv rho {:.4}\n\
         test auroc {:.4} [{:.4}, {:.4}], rho_hat {:.4} [{:.4}, {:.4}], n_test {}\n",
        r.estimator,
        serde_json::to_value(r.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        r.chosen_alpha,
        r.cv_auroc,
        r.cv_rho,
        e.auroc,
        e.auroc_ci.0,
        e.auroc_ci.1,
        e.rho_hat,
        e.rho_ci.0,
        e.rho_ci.1,
        e.n_test
    );
    if r.estimator.is_tree_based() {
        s += &format!("max_depth {}\n", r.chosen.max_depth);
    }
    for f in &r.features {
        s += &format!("  {:<24} usage {:.4}  missing {:.4}\n", f.feature, f.usage, f.missing_rate);
    }
    s
}

pub fn cmd_sweep(cfg: RunConfig) -> Result<()> {
    let data = cfg.load()?;
    let rows = sweep(&data, &cfg.sweep)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
    let mut bytes = Vec::new();
    sweep_csv(&rows, &mut bytes)?;
    write_atomic(&out, &bytes)?;
    let outputs = vec![out.display().to_string()];
    write_json(&sidecar(&out), &Manifest::new("sweep", &cfg, outputs))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SynthRecord<'a> {
    process: &'a OddcProcess,
    n: usize,
    seed: u64,
}

fn write_dataset(path: &Path, data: &Dataset, provenance: Vec<serde_json::Value>) -> Result<()> {
    let mut bytes = Vec::new();
    write_csv(data, &mut bytes)?;
    write_atomic(path, &bytes)?;
    let manifest = DatasetManifest { provenance, ..data.manifest() };
    write_json(&sidecar(path), &manifest)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let process = load_process(&a.spec)?;
    let data = generate(&process, a.n, a.seed)?;
    let record = Manifest::new("synth", SynthRecord { process: &process, n: a.n, seed: a.seed }, vec![a.out.display().to_string()]);
    write_dataset(&a.out, &data, vec![serde_json::to_value(record)?])?;
    println!("wrote {} rows to {}", data.n_rows(), a.out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct InjectRecord<'a> {
    input: &'a Path,
    injection: crate::dataset::InjectionRecord,
}

pub fn cmd_inject(a: &InjectArgs) -> Result<()> {
    let data = load_csv(&a.data, &CsvOptions::new(&a.label))?;
    let spec = InjectionSpec { mechanism: a.mechanism, rate: a.rate, feature_fraction: a.feature_fraction, seed: a.seed };
    let (injected, injection) = inject_missingness(&data, &spec)?;
    // Keep the history of the input file when it has a manifest.
    let mut provenance = match std::fs::read_to_string(sidecar(&a.data)) {
        Ok(text) => serde_json::from_str::<DatasetManifest>(&text).map(|m| m.provenance).unwrap_or_default(),
        Err(_) => Vec::new(),
    };
    let record = Manifest::new("inject", InjectRecord { input: &a.data, injection }, vec![a.out.display().to_string()]);
    provenance.push(serde_json::to_value(record)?);
    write_dataset(&a.out, &injected, provenance)?;
    println!("wrote {} rows to {}", injected.n_rows(), a.out.display());
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct DotIndexEntry {
    tree: usize,
    file: String,
    depth: usize,
    leaves: usize,
}

#[derive(Debug, Serialize)]
struct DotIndex {
    kind: crate::ensemble::EnsembleKind,
    base_score: f64,
    learning_rate: f64,
    trees: Vec<DotIndexEntry>,
}

pub fn cmd_inspect(a: &InspectArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let names: Vec<String> = file.preprocessor.encoder.features.iter().map(|f| f.name.clone()).collect();
    let coloring = match &a.data {
        Some(path) => Some(file.preprocessor.transform(&load_csv(path, &CsvOptions::new(&file.label))?)?),
        None => None,
    };
    let dot = |tree: &DecisionTree| {
        let m = coloring.as_ref().map(|d| node_missingness(tree, d));
        to_dot(tree, &names, m.as_deref())
    };
    match (a.format, &file.model) {
        (Format::Json, model) => emit(a.out.as_deref(), &(serde_json::to_string_pretty(model)? + "\n")),
        (Format::Text, Model::Tree(tree)) => emit(a.out.as_deref(), &tree_text(tree, &names)),
        (Format::Text, Model::Linear(lin)) => emit(a.out.as_deref(), &linear_table(lin, &file.missing_rates)),
        (Format::Text, Model::Ensemble(ens)) => emit(a.out.as_deref(), &ensemble_text(ens, &names)),
        (Format::Dot, Model::Tree(tree)) => emit(a.out.as_deref(), &dot(tree)),
        (Format::Dot, Model::Linear(_)) => Err(Error::Config("DOT output needs a tree-based model".into())),
        (Format::Dot, Model::Ensemble(ens)) => {
            let dir = a.out.as_deref().ok_or_else(|| Error::Config("ensemble DOT output needs --out DIR".into()))?;
            let mut trees = Vec::with_capacity(ens.len());
            for (t, tree) in ens.trees.iter().enumerate() {
                let name = format!("tree_{t:03}.dot");
                write_atomic(&dir.join(&name), dot(tree).as_bytes())?;
                trees.push(DotIndexEntry { tree: t, file: name, depth: tree.depth(), leaves: tree.n_leaves() });
            }
            let index = DotIndex { kind: ens.kind, base_score: ens.base_score, learning_rate: ens.gamma, trees };
            write_json(&dir.join("index.json"), &index)?;
            println!("wrote {} DOT files and index.json to {}", ens.len(), dir.display());
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    satisfied: bool,
    satisfied_union: bool,
    trees: Vec<OddcCheck>,
    sampled: Option<ZeroRelianceReport>,
    violation: Option<String>,
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let process = load_process(&a.spec)?;
    let trees: Vec<&DecisionTree> = match &file.model {
        Model::Tree(t) => vec![t],
        Model::Ensemble(e) => e.trees.iter().collect(),
        Model::Linear(_) => return Err(Error::Config("verify-oddc needs a tree-based model".into())),
    };
    let columns: Vec<&str> = file.preprocessor.encoder.source_columns.iter().map(|c| c.name.as_str()).collect();
    if columns != process.feature_names() {
        return Err(Error::Config(format!(
            "model columns {columns:?} do not match process features {:?}",
            process.feature_names()
        )));
    }
    let reference = generate(&process, a.n, a.seed)?;
    let space = FeatureSpace::from_encoder(&file.preprocessor.encoder, &reference);
    let checks: Vec<OddcCheck> = trees.iter().map(|t| check_tree(t, &process.rules, &space)).collect();
    let satisfied = checks.iter().all(|c| c.satisfied);
    let satisfied_union = checks.iter().all(|c| c.satisfied_union);
    let (sampled, violation) = match verify_zero_reliance(&file.model, &file.preprocessor, &process, a.n, a.seed.wrapping_add(1)) {
        Ok(r) => (Some(r), None),
        Err(Error::PropertyViolation(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let report = VerifyReport { satisfied, satisfied_union, trees: checks, sampled, violation };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    emit(a.out.as_deref(), &text)?;
    if a.out.is_some() {
        print!("{text}");
    }
    if let Some(msg) = report.violation {
        return Err(Error::PropertyViolation(msg));
    }
    if !report.satisfied {
        let nodes: Vec<usize> = report.trees.iter().flat_map(|c| c.violating.iter().copied()).collect();
        return Err(Error::PropertyViolation(format!("split nodes {nodes:?} are not covered by any observation rule")));
    }
    Ok(())
}
