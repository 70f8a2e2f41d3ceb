//! The `sprl` command line: prep, train, eval, ablate, compare and synth.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::record::read_jsonl;
use crate::data::{
    Dataset, FrameMap, LabelMode, PropertyCatalog, Record, Resolvers, SenseMap, STANDARD_FRACTIONS,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    contingency_cells, disagreement_sample, prediction_rows, spr_report, PredictionRow,
    Predictions,
};
use crate::model::Decoder;
use crate::seeds::Seeds;
use crate::synthetic;
use crate::training::experiment::{embedding_table, load_task};
use crate::training::{
    ablation_run, AblationMode, AblationSpec, Checkpoint, EmbeddingMeta, ExperimentConfig, PreparedExperiment,
    Regime, TaskData, TaskKind, CO_TRAIN_LAMBDA,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sprl", version, about = "Semantic proto-role labeling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw annotation files to prepared JSON Lines datasets.
    Prep(PrepArgs),
    /// Train a model from an experiment config.
    Train(TrainArgs),
    /// Evaluate a checkpoint on an SPR dataset.
    Eval(EvalArgs),
    /// Learning curves for one property under label subsampling.
    Ablate(AblateArgs),
    /// Compare two prediction files.
    Compare(CompareArgs),
    /// Write a generated dataset with embeddings and example configs.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode, default_value = "binary")]
    pub mode: LabelMode,
    /// "spr1" or "spr2"; defaults to the label keys of the first record.
    #[arg(long)]
    pub catalog: Option<String>,
    #[arg(long)]
    pub sense_map: Option<PathBuf>,
    #[arg(long)]
    pub frame_map: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_regime)]
    pub regime: Option<Regime>,
    /// Down-weight for every concurrent auxiliary task.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Decoder to evaluate; defaults to the first SPR decoder.
    #[arg(long)]
    pub task: Option<String>,
    /// Defaults to the mode the decoder was trained in.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<LabelMode>,
    /// Overrides the embedding file recorded in the checkpoint.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "eval")]
    pub split: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Experiment config whose target task supplies train, dev and test sets.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub property: String,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_ablation_mode)]
    pub modes: Option<Vec<AblationMode>>,
    /// Defaults to the config's seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Shorthand for a single seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = CO_TRAIN_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline predictions file.
    #[arg(long)]
    pub base: PathBuf,
    /// New-system predictions file.
    #[arg(long)]
    pub new: PathBuf,
    /// Gold labels; defaults to the gold column of the prediction files.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub property: String,
    /// Instance ids, one per line, defining an extra subset.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    pub n_true: usize,
    #[arg(long, default_value_t = 40)]
    pub n_false: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub instances: usize,
    #[arg(long, default_value_t = 32)]
    pub embedding_dim: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn parse_mode(s: &str) -> std::result::Result<LabelMode, String> {
    match s {
        "binary" => Ok(LabelMode::Binary),
        "scalar" => Ok(LabelMode::Scalar),
        other => Err(format!("unknown mode {other:?}; expected binary or scalar")),
    }
}

fn parse_regime(s: &str) -> std::result::Result<Regime, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ablation_mode(s: &str) -> std::result::Result<AblationMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Lookup { .. } => EXIT_CONFIG,
        Error::NonFinite { .. } => EXIT_DIVERGED,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Prep(a) => cmd_prep(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Writes rows with a header line; `header` is used only when there are no rows.
fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn catalog_named(name: Option<&str>) -> Result<Option<PropertyCatalog>> {
    match name {
        None => Ok(None),
        Some("spr1") => Ok(Some(PropertyCatalog::spr1())),
        Some("spr2") => Ok(Some(PropertyCatalog::spr2())),
        Some(other) => Err(Error::Config(format!("unknown catalog {other:?}"))),
    }
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Label distribution of a prepared dataset, one line per property.
pub fn label_summary(ds: &Dataset) -> String {
    let mut out = String::new();
    for (k, name) in ds.catalog.names().iter().enumerate() {
        let labels: Vec<_> = ds.instances.iter().filter_map(|i| i.labels[k]).collect();
        match ds.mode {
            LabelMode::Binary => {
                let t = labels.iter().filter(|l| l.as_bool() == Some(true)).count();
                let pct = if labels.is_empty() { 0.0 } else { 100.0 * t as f64 / labels.len() as f64 };
                out.push_str(&format!("  {name}: {t}/{} true ({pct:.1}%)\n", labels.len()));
            }
            LabelMode::Scalar => {
                let vals: Vec<f64> = labels.iter().filter_map(|l| l.as_scalar()).collect();
                let mean = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
                out.push_str(&format!("  {name}: n={} mean {mean:.3}\n", vals.len()));
            }
        }
    }
    let dists: Vec<f64> = ds
        .instances
        .iter()
        .filter_map(|i| i.supersense.as_ref().map(|d| d.perplexity()))
        .collect();
    if !dists.is_empty() {
        out.push_str(&format!(
            "  supersense: {} instances, mean perplexity {:.3}\n",
            dists.len(),
            dists.iter().sum::<f64>() / dists.len() as f64
        ));
    }
    let roles = ds.instances.iter().filter(|i| i.propbank_role.is_some()).count();
    if roles > 0 {
        out.push_str(&format!("  propbank: {roles} instances with roles\n"));
    }
    out
}

pub fn cmd_prep(a: &PrepArgs) -> Result<()> {
    let senses = a.sense_map.as_deref().map(SenseMap::load).transpose()?;
    let frames = a.frame_map.as_deref().map(FrameMap::load).transpose()?;
    let resolvers = Resolvers {
        senses: senses.as_ref(),
        frames: frames.as_ref(),
    };
    let catalog = catalog_named(a.catalog.as_deref())?;
    let train = Dataset::load(&a.train, a.mode, catalog.as_ref(), &resolvers)?;
    let mut splits = vec![("train", train)];
    for (name, path) in [("dev", &a.dev), ("test", &a.test)] {
        if let Some(p) = path {
            let ds = Dataset::load(p, a.mode, Some(&splits[0].1.catalog), &resolvers)?;
            splits.push((name, ds));
        }
    }
    fs::create_dir_all(&a.out_dir)?;
    for (name, ds) in &splits {
        ds.save(&a.out_dir.join(format!("{name}.jsonl")))?;
        println!("{name}: {} instances ({} labels)", ds.len(), ds.mode);
        print!("{}", label_summary(ds));
    }
    Ok(())
}

/// Everything needed to rerun a training command.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub condition: String,
    pub config: ExperimentConfig,
    pub config_toml: String,
    pub seeds: Seeds,
    pub datasets: BTreeMap<String, String>,
    pub mixing: Vec<crate::training::experiment::MixingRecord>,
    pub started_unix: u64,
}

#[derive(Serialize)]
struct HistoryRow<'a> {
    stage: &'a str,
    task: &'a str,
    epoch: usize,
    steps: usize,
    train_loss: f64,
    metric: &'a str,
    dev_value: Option<f64>,
    best: bool,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let config = ExperimentConfig::load(&a.config)?.with_overrides(a.seed, a.regime, a.lambda)?;
    let prepared = PreparedExperiment::new(&config)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut datasets = BTreeMap::new();
    for f in prepared.config.input_files() {
        datasets.insert(f.display().to_string(), file_sha256(f)?);
    }
    let manifest = RunManifest {
        tool: "sprl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        condition: prepared.config.condition(),
        config_toml: prepared.config.to_toml()?,
        config: prepared.config.clone(),
        seeds: prepared.seeds,
        datasets,
        mixing: prepared.mixing.clone(),
        started_unix: unix_now(),
    };
    write_json(&a.out_dir.join("manifest.json"), &manifest)?;
    log::info!("training condition {}", manifest.condition);
    let result = prepared.run()?;
    let mut rows = Vec::new();
    for s in &result.stages {
        for h in &s.history {
            rows.push(HistoryRow {
                stage: &s.stage,
                task: &s.task,
                epoch: h.epoch,
                steps: h.steps,
                train_loss: h.train_loss,
                metric: &h.metric,
                dev_value: h.dev_value,
                best: h.best,
            });
        }
    }
    write_csv(
        &a.out_dir.join("history.csv"),
        &rows,
        &["stage", "task", "epoch", "steps", "train_loss", "metric", "dev_value", "best"],
    )?;
    let checkpoint = Checkpoint::new(
        result.outcome.model.clone(),
        result.outcome.best_epoch,
        result.outcome.best_dev,
        &prepared.modes(),
        prepared.config.clip_norm,
        EmbeddingMeta {
            dim: prepared.table.dim(),
            oov_seed: prepared.table.oov_seed(),
            source: prepared.config.data.embeddings.as_ref().map(|p| p.display().to_string()),
        },
    );
    checkpoint.save(&a.out_dir.join("checkpoint.bin"))?;
    println!(
        "{}: best epoch {} dev {}",
        result.condition,
        result.outcome.best_epoch,
        result
            .outcome
            .best_dev
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    if let Some(r) = &result.outcome.best_report {
        print!("{}", r.display());
    }
    Ok(())
}

/// Loads an SPR dataset against a checkpoint's property catalog.
pub fn load_for_catalog(path: &Path, mode: LabelMode, catalog: &PropertyCatalog) -> Result<Dataset> {
    let records: Vec<Record> = read_jsonl(path)?;
    let Some(first) = records.first() else {
        return Err(Error::Data(vec![format!("{}: no records", path.display())]));
    };
    let keys: BTreeSet<&String> = first.labels.keys().collect();
    let expected: BTreeSet<&String> = catalog.names().iter().collect();
    if keys != expected {
        return Err(Error::Contract(format!(
            "{}: properties {:?} do not match the checkpoint catalog {:?}",
            path.display(),
            keys,
            catalog.names()
        )));
    }
    Dataset::from_records(&records, mode, Some(catalog), &Resolvers::default()).map_err(|e| match e {
        Error::Data(d) => Error::Data(d.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
        other => other,
    })
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let task = match &a.task {
        Some(t) => t.clone(),
        None => ckpt
            .model
            .decoders
            .iter()
            .find(|(_, d)| matches!(d, Decoder::Spr(_)))
            .map(|(n, _)| n.clone())
            .ok_or_else(|| Error::Contract("checkpoint has no SPR decoder".into()))?,
    };
    let Some(Decoder::Spr(dec)) = ckpt.model.decoder(&task) else {
        return Err(Error::Contract(format!("checkpoint has no SPR decoder {task:?}")));
    };
    let mode = a.mode.or_else(|| ckpt.mode(&task)).unwrap_or(LabelMode::Binary);
    let data = load_for_catalog(&a.data, mode, &dec.catalog)?;
    let meta = &ckpt.header.embeddings;
    let source = a.embeddings.clone().or_else(|| meta.source.as_ref().map(PathBuf::from));
    let table = embedding_table(
        &crate::training::experiment::DataConfig { embeddings: source },
        &data.vocabulary(),
        meta.dim,
        meta.oov_seed,
    )?;
    let scores = ckpt.model.spr_scores(&task, &data.instances, &table)?;
    let report = spr_report(&dec.catalog, mode, &data.instances, &scores, &a.split, Some(ckpt.header.epoch))?;
    let predictions = prediction_rows(&dec.catalog, mode, &data.instances, &scores)?;
    fs::create_dir_all(&a.out_dir)?;
    write_csv(&a.out_dir.join("metrics.csv"), &report.rows(), &["split", "epoch", "property", "metric", "value"])?;
    write_json(&a.out_dir.join("metrics.json"), &report)?;
    write_csv(
        &a.out_dir.join("predictions.csv"),
        &predictions,
        &["instance_id", "property", "score", "probability", "prediction", "gold"],
    )?;
    let undefined = report.undefined_pearson();
    if !undefined.is_empty() {
        eprintln!("warning: Pearson undefined (reported as 0) for {undefined:?}");
    }
    print!("{}", report.display());
    Ok(())
}

#[derive(Serialize)]
struct FlagRow<'a> {
    property: &'a str,
    fraction: f64,
    mode: AblationMode,
    seed: u64,
    positives: usize,
    sampled: usize,
    flag: &'a str,
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let config = ExperimentConfig::load(&a.config)?;
    if config.target.kind != TaskKind::Spr {
        return Err(Error::Config("the ablation target must be an SPR task".into()));
    }
    if config.target.mode != LabelMode::Binary {
        return Err(Error::Config("the ablation runs on binary labels".into()));
    }
    let loaded = load_task(&config.target, &config.model)?;
    let TaskData::Spr { train, dev: Some(dev), .. } = &loaded.data else {
        return Err(Error::Config("the ablation needs a dev set for model selection".into()));
    };
    let test = loaded
        .test
        .as_ref()
        .ok_or_else(|| Error::Config("the ablation needs a test set".into()))?;
    let seeds = match (&a.seeds, a.seed) {
        (Some(s), _) => s.clone(),
        (None, Some(s)) => vec![s],
        (None, None) => vec![config.seed],
    };
    let mut spec = AblationSpec::standard(&a.property, seeds, config.model.clone());
    spec.fractions = a.fractions.clone().unwrap_or_else(|| STANDARD_FRACTIONS.to_vec());
    if let Some(m) = &a.modes {
        spec.modes = m.clone();
    }
    spec.lambda = a.lambda;
    spec.epochs = config.epochs;
    spec.learning_rate = config.learning_rate;
    spec.clip_norm = config.clip_norm;
    let mut vocab = train.vocabulary();
    vocab.extend(dev.vocabulary());
    vocab.extend(test.vocabulary());
    let table = embedding_table(
        &config.data,
        &vocab,
        config.model.embedding_dim,
        Seeds::from_master(config.seed).oov,
    )?;
    let cells = ablation_run(&spec, train, dev, test, &table)?;
    fs::create_dir_all(&a.out_dir)?;
    let rows: Vec<_> = cells.iter().map(|c| c.row()).collect();
    write_csv(
        &a.out_dir.join("curve.csv"),
        &rows,
        &["property", "fraction", "mode", "seed", "epoch", "split", "metric", "value"],
    )?;
    let flags: Vec<FlagRow<'_>> = cells
        .iter()
        .flat_map(|c| {
            c.flags.iter().map(move |f| FlagRow {
                property: &c.property,
                fraction: c.fraction,
                mode: c.mode,
                seed: c.seed,
                positives: c.positives,
                sampled: c.sampled,
                flag: f,
            })
        })
        .collect();
    write_csv(
        &a.out_dir.join("flags.csv"),
        &flags,
        &["property", "fraction", "mode", "seed", "positives", "sampled", "flag"],
    )?;
    for c in &cells {
        println!(
            "{} {:>5} {:<11} seed {}: test F1 {:.1} (epoch {}){}",
            c.property,
            c.fraction,
            c.mode.to_string(),
            c.seed,
            c.test_f1 * 100.0,
            c.best_epoch,
            if c.flags.is_empty() { String::new() } else { format!(" [{}]", c.flags.join(", ")) }
        );
    }
    Ok(())
}

/// Binary predictions and gold labels for one property from a predictions file.
pub fn predictions_for(path: &Path, property: &str) -> Result<(Predictions, Predictions)> {
    let rows: Vec<PredictionRow> = read_csv(path)?;
    let mut preds = Predictions::new();
    let mut gold = Predictions::new();
    for r in rows.iter().filter(|r| r.property == property) {
        let parse = |v: &str| -> Result<bool> {
            v.parse()
                .map_err(|_| Error::data(format!("{}: {:?} is not a binary value", path.display(), v)))
        };
        preds.insert(r.instance_id.clone(), parse(&r.prediction)?);
        gold.insert(r.instance_id.clone(), parse(&r.gold)?);
    }
    if preds.is_empty() {
        return Err(Error::data(format!("{}: no rows for property {property:?}", path.display())));
    }
    Ok((preds, gold))
}

#[derive(Serialize)]
struct SampleRow<'a> {
    instance_id: &'a str,
    gold: bool,
    base: bool,
    new: bool,
}

#[derive(Serialize)]
struct ContingencyRow {
    subset: String,
    new_correct_true: u64,
    base_correct_true: u64,
    new_correct_false: u64,
    base_correct_false: u64,
    differ: u64,
    delta_false_neg: i64,
    delta_false_pos: i64,
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let (base, gold_a) = predictions_for(&a.base, &a.property)?;
    let (new, gold_b) = predictions_for(&a.new, &a.property)?;
    let gold = match &a.gold {
        Some(p) => predictions_for(p, &a.property)?.1,
        None => {
            if gold_a != gold_b {
                return Err(Error::Contract("the two prediction files disagree on gold labels".into()));
            }
            gold_a
        }
    };
    let sample = disagreement_sample(&base, &new, &gold, a.n_true, a.n_false, a.seed)?;
    if sample.is_short() {
        eprintln!(
            "warning: fewer disagreements than requested ({} true, {} false short)",
            sample.shortfall_true, sample.shortfall_false
        );
    }
    let sample_ids: Vec<String> = sample.ids().cloned().collect();
    let mut subsets: Vec<(String, Option<Vec<String>>)> =
        vec![("all".into(), None), ("sample".into(), Some(sample_ids.clone()))];
    if let Some(p) = &a.subset {
        let text = fs::read_to_string(p)?;
        let ids = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        subsets.push((p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), Some(ids)));
    }
    let mut rows = Vec::new();
    for (name, ids) in &subsets {
        let cells = contingency_cells(&base, &new, &gold, ids.as_deref())?;
        let d = cells.delta();
        println!("{name}: differ {} ΔFalse− {} ΔFalse+ {}", d.differ, d.delta_false_neg, d.delta_false_pos);
        rows.push(ContingencyRow {
            subset: name.clone(),
            new_correct_true: cells.new_correct_true,
            base_correct_true: cells.base_correct_true,
            new_correct_false: cells.new_correct_false,
            base_correct_false: cells.base_correct_false,
            differ: d.differ,
            delta_false_neg: d.delta_false_neg,
            delta_false_pos: d.delta_false_pos,
        });
    }
    fs::create_dir_all(&a.out_dir)?;
    let sample_rows: Vec<SampleRow<'_>> = sample_ids
        .iter()
        .map(|id| SampleRow {
            instance_id: id,
            gold: gold[id],
            base: base[id],
            new: new[id],
        })
        .collect();
    write_csv(&a.out_dir.join("sample.csv"), &sample_rows, &["instance_id", "gold", "base", "new"])?;
    write_csv(
        &a.out_dir.join("contingency.csv"),
        &rows,
        &[
            "subset",
            "new_correct_true",
            "base_correct_true",
            "new_correct_false",
            "base_correct_false",
            "differ",
            "delta_false_neg",
            "delta_false_pos",
        ],
    )?;
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.instances < 10 {
        return Err(Error::Config("need at least 10 instances".into()));
    }
    fs::create_dir_all(&a.out_dir)?;
    let catalog = synthetic::synthetic_catalog();
    let (train, dev, test) = synthetic::synthetic_splits(a.instances, a.seed);
    for (name, recs) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let ds = Dataset::from_records(recs, LabelMode::Binary, Some(&catalog), &Resolvers::default())?;
        ds.save(&a.out_dir.join(format!("{name}.jsonl")))?;
    }
    let overfit = synthetic::random_label_records(64, a.seed);
    crate::data::record::save_jsonl(&overfit, &a.out_dir.join("overfit.jsonl"))?;
    synthetic::copy_corpus(50, a.seed).save(&a.out_dir.join("copy.jsonl"))?;
    synthetic::write_embeddings(
        &a.out_dir.join("embeddings.txt"),
        &synthetic::synthetic_embeddings(a.embedding_dim, a.seed),
    )?;
    let model = format!(
        "[model]\nembedding_dim = {}\nhidden_dim = 64\nshared_dim = 64\nmt_layers = 1\nmt_embedding_dim = 32\nmt_vocab_size = 200\n\n[data]\nembeddings = \"embeddings.txt\"\n",
        a.embedding_dim
    );
    let target = "[target]\nname = \"syn\"\nkind = \"spr\"\ntrain = \"train.jsonl\"\ndev = \"dev.jsonl\"\ntest = \"test.jsonl\"\n";
    fs::write(
        a.out_dir.join("single.toml"),
        format!("regime = \"single\"\nseed = {}\nepochs = 10\n\n{model}\n{target}", a.seed),
    )?;
    fs::write(
        a.out_dir.join("pretrain.toml"),
        format!(
            "regime = \"init-pretrain\"\nseed = {}\nepochs = 10\n\n{model}\n{target}\n[[auxiliary]]\nname = \"mt\"\nkind = \"mt\"\ntrain = \"copy.jsonl\"\nstage = \"pretrain\"\nepochs = 5\n",
            a.seed
        ),
    )?;
    println!(
        "wrote {} train, {} dev, {} test instances to {}",
        train.len(),
        dev.len(),
        test.len(),
        a.out_dir.display()
    );
    Ok(())
}
