//! Experiment configuration files and the four training regimes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tasks::{mixing_weight, MtExamples, Task, TaskData, TaskKind};
use super::trainer::{train, EpochRecord, TrainOptions, TrainOutcome, DEFAULT_CLIP_NORM};
use crate::data::{Dataset, EmbeddingTable, FrameMap, LabelMode, ParallelCorpus, PropertyCatalog, Resolvers, SenseMap};
use crate::decoders::mt::TargetVocab;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::numeric::AdamConfig;
use crate::seeds::{derive, Seeds};

/// Allowed auxiliary down-weights.
pub const LAMBDA_GRID: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];

pub fn is_grid_lambda(lambda: f64) -> bool {
    LAMBDA_GRID.iter().any(|l| (l - lambda).abs() <= 1e-12 * l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Single,
    InitPretrain,
    Concurrent,
    Combined,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Single => "single",
            Regime::InitPretrain => "init-pretrain",
            Regime::Concurrent => "concurrent",
            Regime::Combined => "combined",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Regime::Single),
            "init-pretrain" => Ok(Regime::InitPretrain),
            "concurrent" => Ok(Regime::Concurrent),
            "combined" => Ok(Regime::Combined),
            other => Err(Error::Config(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pretrain,
    Concurrent,
}

fn default_mode() -> LabelMode {
    LabelMode::Binary
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub name: String,
    pub kind: TaskKind,
    pub train: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// SPR label mode.
    #[serde(default = "default_mode")]
    pub mode: LabelMode,
    /// "spr1", "spr2", or omitted to take the property set from the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense_map: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_map: Option<PathBuf>,
    /// Auxiliary tasks only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
    /// Concurrent auxiliaries only; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Pretraining auxiliaries only; defaults to the experiment's epochs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Pre-trained word vectors; without them every token gets a seeded random vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
}

fn default_seed() -> u64 {
    1
}
fn default_epochs() -> usize {
    10
}
fn default_lr() -> f64 {
    1e-3
}
fn default_clip() -> Option<f64> {
    Some(DEFAULT_CLIP_NORM)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: Regime,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_clip")]
    pub clip_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub target: TaskConfig,
    #[serde(default)]
    pub auxiliary: Vec<TaskConfig>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl TaskConfig {
    fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.train);
        resolve_opt(base, &mut self.dev);
        resolve_opt(base, &mut self.test);
        resolve_opt(base, &mut self.sense_map);
        resolve_opt(base, &mut self.frame_map);
    }

    fn files(&self) -> Vec<&Path> {
        [
            Some(&self.train),
            self.dev.as_ref(),
            self.test.as_ref(),
            self.sense_map.as_ref(),
            self.frame_map.as_ref(),
        ]
        .into_iter()
        .flatten()
        .map(PathBuf::as_path)
        .collect()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Parses a config file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), flatten(&e))))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve_opt(base, &mut self.data.embeddings);
        self.target.resolve_paths(base);
        for a in &mut self.auxiliary {
            a.resolve_paths(base);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config serialization: {e}")))
    }

    /// The same config with every default written out.
    pub fn materialized(&self) -> Self {
        let mut c = self.clone();
        for a in &mut c.auxiliary {
            match a.stage {
                Some(Stage::Concurrent) => {
                    a.lambda.get_or_insert(1.0);
                }
                Some(Stage::Pretrain) => {
                    a.epochs.get_or_insert(self.epochs);
                }
                None => {}
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.embedding_dim == 0 || m.hidden_dim == 0 || m.shared_dim == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip norm {c} must be positive")));
            }
        }
        if self.target.stage.is_some() || self.target.lambda.is_some() || self.target.epochs.is_some() {
            return Err(Error::Config(
                "the target task takes no stage, lambda or epochs setting".into(),
            ));
        }
        let mut names = BTreeSet::from([self.target.name.as_str()]);
        let (mut pretrain, mut concurrent) = (0, 0);
        for a in &self.auxiliary {
            if !names.insert(a.name.as_str()) {
                return Err(Error::Config(format!("duplicate task name {:?}", a.name)));
            }
            match a.stage {
                None => {
                    return Err(Error::Config(format!(
                        "auxiliary task {:?} needs stage = \"pretrain\" or \"concurrent\"",
                        a.name
                    )))
                }
                Some(Stage::Pretrain) => {
                    pretrain += 1;
                    if a.lambda.is_some() {
                        return Err(Error::Config(format!(
                            "pretraining task {:?} takes no lambda",
                            a.name
                        )));
                    }
                }
                Some(Stage::Concurrent) => {
                    concurrent += 1;
                    if a.epochs.is_some() {
                        return Err(Error::Config(format!(
                            "concurrent task {:?} takes no epochs; it trains with the target",
                            a.name
                        )));
                    }
                    if let Some(l) = a.lambda {
                        if !is_grid_lambda(l) {
                            return Err(Error::Config(format!(
                                "lambda {l} for {:?} is not one of {LAMBDA_GRID:?}",
                                a.name
                            )));
                        }
                    }
                }
            }
        }
        let ok = match self.regime {
            Regime::Single => pretrain == 0 && concurrent == 0,
            Regime::InitPretrain => pretrain > 0 && concurrent == 0,
            Regime::Concurrent => pretrain == 0,
            Regime::Combined => pretrain > 0 && concurrent > 0,
        };
        if !ok {
            return Err(Error::Config(format!(
                "regime {} does not fit {pretrain} pretraining and {concurrent} concurrent auxiliary tasks",
                self.regime
            )));
        }
        Ok(())
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, regime: Option<Regime>, lambda: Option<f64>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(r) = regime {
            self.regime = r;
        }
        if let Some(l) = lambda {
            for a in &mut self.auxiliary {
                if a.stage == Some(Stage::Concurrent) {
                    a.lambda = Some(l);
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Condition label such as `mt:spr1`, `spr1+2` or `mt:propbank:spr1+2`.
    pub fn condition(&self) -> String {
        let mut parts: Vec<String> = self
            .auxiliary
            .iter()
            .filter(|a| a.stage == Some(Stage::Pretrain))
            .map(|a| a.name.clone())
            .collect();
        let mut main = self.target.name.clone();
        for a in self.auxiliary.iter().filter(|a| a.stage == Some(Stage::Concurrent)) {
            main.push('+');
            main.push_str(abbreviate(&self.target.name, &a.name));
        }
        parts.push(main);
        parts.join(":")
    }

    /// Every input file the run reads.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = self.data.embeddings.iter().map(PathBuf::as_path).collect();
        v.extend(self.target.files());
        for a in &self.auxiliary {
            v.extend(a.files());
        }
        v
    }
}

/// `spr2` after `spr1` is written `2`.
fn abbreviate<'a>(target: &str, aux: &'a str) -> &'a str {
    let stem_t = target.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem_a = aux.trim_end_matches(|c: char| c.is_ascii_digit());
    if !stem_a.is_empty() && stem_t == stem_a && stem_a.len() < aux.len() {
        &aux[stem_a.len()..]
    } else {
        aux
    }
}

fn flatten(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

/// A task with its loaded datasets.
#[derive(Clone, Debug)]
pub struct LoadedTask {
    pub config: TaskConfig,
    pub data: TaskData,
    pub test: Option<Dataset>,
}

fn catalog_for(cfg: &TaskConfig) -> Result<Option<PropertyCatalog>> {
    match cfg.catalog.as_deref() {
        None => Ok(None),
        Some("spr1") => Ok(Some(PropertyCatalog::spr1())),
        Some("spr2") => Ok(Some(PropertyCatalog::spr2())),
        Some(other) => Err(Error::Config(format!("unknown catalog {other:?}"))),
    }
}

/// Loads a task's files. MT target vocabularies are built from the training side.
pub fn load_task(cfg: &TaskConfig, model: &ModelConfig) -> Result<LoadedTask> {
    let senses = cfg.sense_map.as_deref().map(SenseMap::load).transpose()?;
    let frames = cfg.frame_map.as_deref().map(FrameMap::load).transpose()?;
    let resolvers = Resolvers {
        senses: senses.as_ref(),
        frames: frames.as_ref(),
    };
    let mode = cfg.mode;
    match cfg.kind {
        TaskKind::Mt => {
            let train = ParallelCorpus::load(&cfg.train)?;
            let dev = cfg.dev.as_deref().map(ParallelCorpus::load).transpose()?;
            let vocab = TargetVocab::build(train.pairs.iter().map(|p| p.target.as_slice()), model.mt_vocab_size);
            Ok(LoadedTask {
                config: cfg.clone(),
                data: TaskData::Mt {
                    train: MtExamples::from_corpus(&train, &vocab),
                    dev: dev.map(|d| MtExamples::from_corpus(&d, &vocab)),
                    vocab,
                },
                test: None,
            })
        }
        kind => {
            let catalog = catalog_for(cfg)?;
            let train = Dataset::load(&cfg.train, mode, catalog.as_ref(), &resolvers)?;
            let load = |p: &Path| Dataset::load(p, mode, Some(&train.catalog), &resolvers);
            let dev = cfg.dev.as_deref().map(load).transpose()?;
            let test = cfg.test.as_deref().map(load).transpose()?;
            let data = match kind {
                TaskKind::Spr => Task::spr_data(train, dev),
                TaskKind::PropBank => TaskData::PropBank { train, dev },
                TaskKind::Supersense => TaskData::Supersense { train, dev },
                TaskKind::Mt => unreachable!(),
            };
            Ok(LoadedTask {
                config: cfg.clone(),
                data,
                test,
            })
        }
    }
}

fn data_vocabulary(data: &TaskData, test: Option<&Dataset>, out: &mut BTreeSet<String>) {
    let mut add_ds = |d: &Dataset| out.extend(d.vocabulary());
    match data {
        TaskData::Spr { train, dev, .. }
        | TaskData::PropBank { train, dev }
        | TaskData::Supersense { train, dev } => {
            add_ds(train);
            if let Some(d) = dev {
                add_ds(d);
            }
        }
        TaskData::Mt { train, dev, .. } => {
            for (s, _) in train.pairs.iter().chain(dev.iter().flat_map(|d| d.pairs.iter())) {
                out.extend(s.iter().map(|t| t.to_lowercase()));
            }
        }
    }
    if let Some(t) = test {
        out.extend(t.vocabulary());
    }
}

/// Builds the embedding table for a set of tokens.
pub fn embedding_table(data: &DataConfig, vocabulary: &BTreeSet<String>, dim: usize, oov_seed: u64) -> Result<EmbeddingTable> {
    match &data.embeddings {
        Some(p) => EmbeddingTable::load(p, vocabulary, dim, oov_seed),
        None => Ok(EmbeddingTable::random(vocabulary, dim, oov_seed)),
    }
}

/// How an auxiliary task's loss was weighted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingRecord {
    pub task: String,
    pub n_target: usize,
    pub n_aux: usize,
    pub alpha: f64,
    pub lambda: f64,
}

/// Everything needed to run an experiment, loaded and validated.
#[derive(Clone, Debug)]
pub struct PreparedExperiment {
    pub config: ExperimentConfig,
    pub seeds: Seeds,
    pub target: LoadedTask,
    pub pretrain: Vec<(Task, usize)>,
    pub concurrent: Vec<Task>,
    pub mixing: Vec<MixingRecord>,
    pub table: EmbeddingTable,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub task: String,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub condition: String,
    pub stages: Vec<StageRecord>,
    pub outcome: TrainOutcome,
}

impl PreparedExperiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let config = config.materialized();
        let seeds = Seeds::from_master(config.seed);
        let target = load_task(&config.target, &config.model)?;
        let target_task = Task::target(&config.target.name, target.data.clone());
        let n_target = target_task.train_len();
        let mut vocab = BTreeSet::new();
        data_vocabulary(&target.data, target.test.as_ref(), &mut vocab);
        let mut pretrain = Vec::new();
        let mut concurrent = Vec::new();
        let mut mixing = Vec::new();
        for a in &config.auxiliary {
            let loaded = load_task(a, &config.model)?;
            data_vocabulary(&loaded.data, loaded.test.as_ref(), &mut vocab);
            match a.stage {
                Some(Stage::Pretrain) => {
                    let t = Task::pretraining(&a.name, loaded.data);
                    pretrain.push((t, a.epochs.unwrap_or(config.epochs)));
                }
                Some(Stage::Concurrent) => {
                    let n_aux = loaded.data.train_len();
                    let alpha = mixing_weight(n_target, n_aux)?;
                    let lambda = a.lambda.unwrap_or(1.0);
                    mixing.push(MixingRecord {
                        task: a.name.clone(),
                        n_target,
                        n_aux,
                        alpha,
                        lambda,
                    });
                    concurrent.push(Task::auxiliary(&a.name, loaded.data, alpha, lambda)?);
                }
                None => unreachable!("validated"),
            }
        }
        let table = embedding_table(&config.data, &vocab, config.model.embedding_dim, seeds.oov)?;
        Ok(PreparedExperiment {
            config,
            seeds,
            target,
            pretrain,
            concurrent,
            mixing,
            table,
        })
    }

    pub fn options(&self, epochs: usize, stage: &str) -> TrainOptions {
        TrainOptions {
            epochs,
            adam: AdamConfig {
                learning_rate: self.config.learning_rate,
                ..AdamConfig::default()
            },
            clip_norm: self.config.clip_norm,
            schedule_seed: derive(self.seeds.schedule, stage),
        }
    }

    pub fn run(&self) -> Result<ExperimentOutcome> {
        let mut tasks = vec![Task::target(&self.config.target.name, self.target.data.clone())];
        tasks.extend(self.concurrent.iter().cloned());
        let stages: Vec<(Task, TrainOptions)> = self
            .pretrain
            .iter()
            .map(|(t, e)| (t.clone(), self.options(*e, &format!("pretrain.{}", t.name))))
            .collect();
        let model = Model::new(self.config.model.clone(), self.seeds.init);
        let (outcome, mut records) = pretrain_then_finetune(
            model,
            &stages,
            &tasks,
            &self.table,
            &self.options(self.config.epochs, "target"),
            self.seeds.init,
        )?;
        records.push(StageRecord {
            stage: "target".into(),
            task: self.config.target.name.clone(),
            best_epoch: outcome.best_epoch,
            history: outcome.history.clone(),
        });
        Ok(ExperimentOutcome {
            condition: self.config.condition(),
            stages: records,
            outcome,
        })
    }

    /// Label modes of the SPR decoders, for checkpoints.
    pub fn modes(&self) -> BTreeMap<String, LabelMode> {
        let mut m = BTreeMap::new();
        let mut add = |name: &str, data: &TaskData| {
            if let TaskData::Spr { train, .. } = data {
                m.insert(name.to_string(), train.mode);
            }
        };
        add(&self.config.target.name, &self.target.data);
        for t in &self.concurrent {
            add(&t.name, &t.data);
        }
        m
    }
}

/// Runs each pretraining stage in order (keeping the encoder, dropping the
/// stage's decoder), then trains `tasks` end to end with fresh decoders.
/// `tasks[0]` is the target.
pub fn pretrain_then_finetune(
    mut model: Model,
    stages: &[(Task, TrainOptions)],
    tasks: &[Task],
    table: &EmbeddingTable,
    options: &TrainOptions,
    init_seed: u64,
) -> Result<(TrainOutcome, Vec<StageRecord>)> {
    if table.dim() != model.encoder.input_dim() {
        return Err(Error::Config(format!(
            "embedding dimension {} does not match encoder input {}",
            table.dim(),
            model.encoder.input_dim()
        )));
    }
    let mut records = Vec::new();
    for (task, opts) in stages {
        task.add_decoder(&mut model, init_seed)?;
        let out = train(model, std::slice::from_ref(task), 0, table, opts)?;
        records.push(StageRecord {
            stage: "pretrain".into(),
            task: task.name.clone(),
            best_epoch: out.best_epoch,
            history: out.history,
        });
        model = out.model;
        model.remove_decoder(&task.name);
    }
    for task in tasks {
        task.add_decoder(&mut model, init_seed)?;
    }
    let outcome = train(model, tasks, 0, table, options)?;
    Ok((outcome, records))
}
