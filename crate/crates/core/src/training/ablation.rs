//! Learning curves for one property under subsampled labels.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tasks::{Selection, Task, TaskData};
use super::trainer::{train, TrainOptions};
use crate::data::{sample_indices, is_standard_fraction, Dataset, EmbeddingTable, Label, LabelMode, STANDARD_FRACTIONS};
use crate::error::{Error, Result};
use crate::evaluation::spr_report;
use crate::model::{Model, ModelConfig};
use crate::numeric::AdamConfig;
use crate::seeds::{derive, Seeds};

/// Weight of the other properties' losses in co-train mode.
pub const CO_TRAIN_LAMBDA: f64 = 0.1;

const TASK: &str = "spr";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    /// Only the sampled instances, only the target property.
    TargetOnly,
    /// All instances; the target label kept on the sample, the others down-weighted.
    CoTrain,
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::TargetOnly => "target-only",
            AblationMode::CoTrain => "co-train",
        })
    }
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target-only" => Ok(AblationMode::TargetOnly),
            "co-train" => Ok(AblationMode::CoTrain),
            other => Err(Error::Config(format!("unknown ablation mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSpec {
    pub property: String,
    pub fractions: Vec<f64>,
    pub modes: Vec<AblationMode>,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub epochs: usize,
    pub model: ModelConfig,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
}

impl AblationSpec {
    /// The six-fraction, two-mode grid.
    pub fn standard(property: &str, seeds: Vec<u64>, model: ModelConfig) -> Self {
        AblationSpec {
            property: property.to_string(),
            fractions: STANDARD_FRACTIONS.to_vec(),
            modes: vec![AblationMode::TargetOnly, AblationMode::CoTrain],
            seeds,
            lambda: CO_TRAIN_LAMBDA,
            epochs: 10,
            model,
            learning_rate: 1e-3,
            clip_norm: Some(super::trainer::DEFAULT_CLIP_NORM),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub property: String,
    pub fraction: f64,
    pub mode: AblationMode,
    pub seed: u64,
    pub best_epoch: usize,
    pub dev_f1: f64,
    pub test_f1: f64,
    /// Sampled target labels that are True.
    pub positives: usize,
    pub sampled: usize,
    pub flags: Vec<String>,
}

/// One curve-table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub property: String,
    pub fraction: f64,
    pub mode: AblationMode,
    pub seed: u64,
    pub epoch: usize,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

impl AblationCell {
    /// Dev-selected test F1 for the target property.
    pub fn row(&self) -> CurveRow {
        CurveRow {
            property: self.property.clone(),
            fraction: self.fraction,
            mode: self.mode,
            seed: self.seed,
            epoch: self.best_epoch,
            split: "test".into(),
            metric: "f1".into(),
            value: self.test_f1,
        }
    }
}

/// Training data for one cell: labels of `property` kept only on `sampled`.
pub fn cell_data(
    train: &Dataset,
    dev: &Dataset,
    property: usize,
    sampled: &[usize],
    mode: AblationMode,
    lambda: f64,
) -> TaskData {
    let k = train.catalog.len();
    match mode {
        AblationMode::TargetOnly => {
            let instances = sampled.iter().map(|&i| train.instances[i].clone()).collect();
            let mut weights = vec![0.0; k];
            weights[property] = 1.0;
            TaskData::Spr {
                train: Dataset {
                    mode: train.mode,
                    catalog: train.catalog.clone(),
                    instances,
                },
                dev: Some(dev.clone()),
                property_weights: weights,
            }
        }
        AblationMode::CoTrain => {
            let mut data = train.clone();
            let mut keep = vec![false; data.instances.len()];
            for &i in sampled {
                keep[i] = true;
            }
            for (inst, keep) in data.instances.iter_mut().zip(keep) {
                if !keep {
                    inst.labels[property] = None;
                }
            }
            let mut weights = vec![lambda; k];
            weights[property] = 1.0;
            TaskData::Spr {
                train: data,
                dev: Some(dev.clone()),
                property_weights: weights,
            }
        }
    }
}

/// Trains one (fraction, mode, seed) cell.
pub fn run_cell(
    spec: &AblationSpec,
    fraction: f64,
    mode: AblationMode,
    seed: u64,
    data: (&Dataset, &Dataset, &Dataset),
    table: &EmbeddingTable,
) -> Result<AblationCell> {
    let (train_set, dev, test) = data;
    let property = train_set.catalog.index_of(&spec.property).ok_or_else(|| Error::Lookup {
        key: spec.property.clone(),
        context: "property catalog".into(),
    })?;
    let seeds = Seeds::from_master(seed);
    let sampled = sample_indices(train_set.len(), fraction, seeds.subsample)?;
    let positives = sampled
        .iter()
        .filter(|&&i| train_set.instances[i].labels[property] == Some(Label::Binary(true)))
        .count();
    let mut flags = Vec::new();
    if positives == 0 {
        flags.push("no positive examples".to_string());
    }
    if !is_standard_fraction(fraction) {
        flags.push("non-standard fraction".to_string());
    }
    let mut task = Task::target(TASK, cell_data(train_set, dev, property, &sampled, mode, spec.lambda));
    task.selection = Selection::PropertyF1(property);
    let mut model = Model::new(spec.model.clone(), seeds.init);
    model.add_spr(TASK, train_set.catalog.clone(), seeds.init)?;
    let options = TrainOptions {
        epochs: spec.epochs,
        adam: AdamConfig {
            learning_rate: spec.learning_rate,
            ..AdamConfig::default()
        },
        clip_norm: spec.clip_norm,
        schedule_seed: derive(seeds.schedule, "ablation"),
    };
    let outcome = train(model, std::slice::from_ref(&task), 0, table, &options)?;
    let dev_f1 = outcome.best_dev.unwrap_or(0.0);
    let scores = outcome.model.spr_scores(TASK, &test.instances, table)?;
    let report = spr_report(&test.catalog, test.mode, &test.instances, &scores, "test", Some(outcome.best_epoch))?;
    Ok(AblationCell {
        property: spec.property.clone(),
        fraction,
        mode,
        seed,
        best_epoch: outcome.best_epoch,
        dev_f1,
        test_f1: report.properties[property].f1,
        positives,
        sampled: sampled.len(),
        flags,
    })
}

/// Every (seed, fraction, mode) cell, in that nesting order. Cells run in parallel.
pub fn ablation_run(
    spec: &AblationSpec,
    train_set: &Dataset,
    dev: &Dataset,
    test: &Dataset,
    table: &EmbeddingTable,
) -> Result<Vec<AblationCell>> {
    for d in [train_set, dev, test] {
        if d.mode != LabelMode::Binary {
            return Err(Error::Config("the ablation runs on binary labels".into()));
        }
        if d.catalog != train_set.catalog {
            return Err(Error::Contract("train, dev and test property catalogs differ".into()));
        }
    }
    if train_set.catalog.index_of(&spec.property).is_none() {
        return Err(Error::Lookup {
            key: spec.property.clone(),
            context: "property catalog".into(),
        });
    }
    if spec.fractions.is_empty() || spec.modes.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one fraction, mode and seed".into()));
    }
    let cells: Vec<(u64, f64, AblationMode)> = spec
        .seeds
        .iter()
        .flat_map(|&s| {
            spec.fractions
                .iter()
                .flat_map(move |&f| spec.modes.iter().map(move |&m| (s, f, m)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(seed, fraction, mode)| run_cell(spec, fraction, mode, seed, (train_set, dev, test), table))
        .collect()
}
