//! Training tasks: a dataset, a decoder kind, and a loss weight.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EmbeddingTable, LabelMode, ParallelCorpus};
use crate::decoders::mt::TargetVocab;
use crate::evaluation::{accuracy, spr_report, MetricsReport};
use crate::error::{Error, Result};
use crate::model::{Example, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Spr,
    PropBank,
    Supersense,
    Mt,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Spr => "spr",
            TaskKind::PropBank => "propbank",
            TaskKind::Supersense => "supersense",
            TaskKind::Mt => "mt",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Auxiliary,
}

/// Translation pairs with target ids (terminated by `</s>`).
#[derive(Clone, Debug, PartialEq)]
pub struct MtExamples {
    pub pairs: Vec<(Vec<String>, Vec<usize>)>,
}

impl MtExamples {
    pub fn from_corpus(corpus: &ParallelCorpus, vocab: &TargetVocab) -> Self {
        MtExamples {
            pairs: corpus
                .pairs
                .iter()
                .map(|p| {
                    let mut ids = vocab.encode(&p.target);
                    ids.push(TargetVocab::EOS_ID);
                    (p.source.clone(), ids)
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TaskData {
    Spr {
        train: Dataset,
        dev: Option<Dataset>,
        /// Loss weight per catalog property.
        property_weights: Vec<f64>,
    },
    PropBank {
        train: Dataset,
        dev: Option<Dataset>,
    },
    Supersense {
        train: Dataset,
        dev: Option<Dataset>,
    },
    Mt {
        train: MtExamples,
        dev: Option<MtExamples>,
        vocab: TargetVocab,
    },
}

impl TaskData {
    pub fn train_len(&self) -> usize {
        match self {
            TaskData::Spr { train, .. }
            | TaskData::PropBank { train, .. }
            | TaskData::Supersense { train, .. } => train.len(),
            TaskData::Mt { train, .. } => train.len(),
        }
    }
}

/// What "best on dev" means for a task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Selection {
    /// Micro-F1 (binary SPR), macro Pearson (scalar SPR), accuracy (PropBank),
    /// negative cross-entropy (supersense), negative per-token NLL (MT).
    Default,
    /// F1 of one SPR property.
    PropertyF1(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub name: String,
    pub role: Role,
    /// Multiplier on every instance loss, `α·λ` for auxiliaries and 1 for targets.
    pub loss_weight: f64,
    pub selection: Selection,
    pub data: TaskData,
}

/// Result of evaluating a task on its dev set.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskEval {
    pub metric_name: String,
    pub value: f64,
    pub report: Option<MetricsReport>,
}

/// `α = n_target / n_aux`.
pub fn mixing_weight(n_target: usize, n_aux: usize) -> Result<f64> {
    if n_target == 0 || n_aux == 0 {
        return Err(Error::Domain(format!(
            "mixing weight needs positive counts, got {n_target} and {n_aux}"
        )));
    }
    Ok(n_target as f64 / n_aux as f64)
}

impl Task {
    pub fn target(name: &str, data: TaskData) -> Self {
        Task {
            name: name.to_string(),
            role: Role::Target,
            loss_weight: 1.0,
            selection: Selection::Default,
            data,
        }
    }

    /// An auxiliary task trained alone before the target.
    pub fn pretraining(name: &str, data: TaskData) -> Self {
        Task {
            role: Role::Auxiliary,
            ..Task::target(name, data)
        }
    }

    pub fn auxiliary(name: &str, data: TaskData, alpha: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(lambda >= 0.0) || !alpha.is_finite() || !lambda.is_finite() {
            return Err(Error::Config(format!(
                "auxiliary task {name:?} needs α > 0 and λ ≥ 0, got {alpha} and {lambda}"
            )));
        }
        Ok(Task {
            name: name.to_string(),
            role: Role::Auxiliary,
            loss_weight: alpha * lambda,
            selection: Selection::Default,
            data,
        })
    }

    /// Convenience constructor for an SPR task with unit property weights.
    pub fn spr_data(train: Dataset, dev: Option<Dataset>) -> TaskData {
        let property_weights = vec![1.0; train.catalog.len()];
        TaskData::Spr {
            train,
            dev,
            property_weights,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match &self.data {
            TaskData::Spr { .. } => TaskKind::Spr,
            TaskData::PropBank { .. } => TaskKind::PropBank,
            TaskData::Supersense { .. } => TaskKind::Supersense,
            TaskData::Mt { .. } => TaskKind::Mt,
        }
    }

    pub fn train_len(&self) -> usize {
        self.data.train_len()
    }

    pub fn has_dev(&self) -> bool {
        match &self.data {
            TaskData::Spr { dev, .. }
            | TaskData::PropBank { dev, .. }
            | TaskData::Supersense { dev, .. } => dev.is_some(),
            TaskData::Mt { dev, .. } => dev.is_some(),
        }
    }

    /// The `i`-th training example, or `None` when it carries no loss
    /// (every property unlabeled or weighted zero).
    pub fn example(&self, i: usize) -> Option<Example<'_>> {
        match &self.data {
            TaskData::Spr {
                train,
                property_weights,
                ..
            } => {
                let inst = &train.instances[i];
                let active = inst
                    .labels
                    .iter()
                    .zip(property_weights)
                    .any(|(l, w)| l.is_some() && *w != 0.0);
                active.then_some(Example::Spr {
                    instance: inst,
                    labels: &inst.labels,
                    weights: property_weights,
                })
            }
            TaskData::PropBank { train, .. } => Some(Example::PropBank(&train.instances[i])),
            TaskData::Supersense { train, .. } => Some(Example::Supersense(&train.instances[i])),
            TaskData::Mt { train, .. } => {
                let (s, t) = &train.pairs[i];
                Some(Example::Mt {
                    source: s,
                    target: t,
                })
            }
        }
    }

    /// Identifier used in divergence diagnostics.
    pub fn example_id(&self, i: usize) -> String {
        match &self.data {
            TaskData::Spr { train, .. }
            | TaskData::PropBank { train, .. }
            | TaskData::Supersense { train, .. } => {
                format!("{}/{}", self.name, train.instances[i].id())
            }
            TaskData::Mt { .. } => format!("{}/pair{}", self.name, i + 1),
        }
    }

    /// Adds this task's decoder to `model`.
    pub fn add_decoder(&self, model: &mut Model, init_seed: u64) -> Result<()> {
        match &self.data {
            TaskData::Spr { train, .. } => model.add_spr(&self.name, train.catalog.clone(), init_seed),
            TaskData::PropBank { .. } => model.add_propbank(&self.name, init_seed),
            TaskData::Supersense { .. } => model.add_supersense(&self.name, init_seed),
            TaskData::Mt { vocab, .. } => model.add_mt(&self.name, vocab.clone(), init_seed),
        }
    }

    /// Dev-set selection metric; `None` without a dev set.
    pub fn evaluate_dev(&self, model: &Model, table: &EmbeddingTable, epoch: usize) -> Result<Option<TaskEval>> {
        match &self.data {
            TaskData::Spr { dev: Some(dev), .. } => {
                let scores = model.spr_scores(&self.name, &dev.instances, table)?;
                let report = spr_report(&dev.catalog, dev.mode, &dev.instances, &scores, "dev", Some(epoch))?;
                let (metric_name, value) = match self.selection {
                    Selection::Default => match dev.mode {
                        LabelMode::Binary => ("micro_f1".to_string(), report.micro_f1),
                        LabelMode::Scalar => {
                            ("macro_pearson".to_string(), report.macro_pearson.unwrap_or(0.0))
                        }
                    },
                    Selection::PropertyF1(k) => {
                        let p = report.properties.get(k).ok_or(Error::Bounds {
                            index: k,
                            len: report.properties.len(),
                        })?;
                        (format!("f1[{}]", p.property), p.f1)
                    }
                };
                Ok(Some(TaskEval {
                    metric_name,
                    value,
                    report: Some(report),
                }))
            }
            TaskData::PropBank { dev: Some(dev), .. } => {
                let dists = model.propbank_distributions(&self.name, &dev.instances, table)?;
                let predicted: Vec<usize> = dists.iter().map(|d| argmax(d)).collect();
                let gold: Vec<usize> = dev
                    .instances
                    .iter()
                    .map(|i| {
                        i.propbank_role
                            .ok_or_else(|| Error::data(format!("instance {} has no PropBank role", i.id())))
                    })
                    .collect::<Result<_>>()?;
                Ok(Some(TaskEval {
                    metric_name: "accuracy".into(),
                    value: accuracy(&predicted, &gold)?,
                    report: None,
                }))
            }
            TaskData::Supersense { dev: Some(dev), .. } => {
                let examples: Vec<Example<'_>> = dev.instances.iter().map(Example::Supersense).collect();
                let ce = model.mean_loss(&self.name, &examples, table)?;
                Ok(Some(TaskEval {
                    metric_name: "neg_cross_entropy".into(),
                    value: -ce,
                    report: None,
                }))
            }
            TaskData::Mt { dev: Some(dev), .. } => {
                let examples: Vec<Example<'_>> = dev
                    .pairs
                    .iter()
                    .map(|(s, t)| Example::Mt { source: s, target: t })
                    .collect();
                let mean = model.mean_loss(&self.name, &examples, table)?;
                let tokens: usize = dev.pairs.iter().map(|(_, t)| t.len()).sum();
                Ok(Some(TaskEval {
                    metric_name: "neg_token_nll".into(),
                    value: -(mean * examples.len() as f64) / tokens as f64,
                    report: None,
                }))
            }
            _ => Ok(None),
        }
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_weight_examples() {
        assert_eq!(mixing_weight(1000, 4000).unwrap(), 0.25);
        assert_eq!(mixing_weight(7, 7).unwrap(), 1.0);
        assert!((mixing_weight(9738, 6091).unwrap() - 1.5988).abs() < 1e-4);
        assert!(mixing_weight(0, 3).is_err());
    }
}
