//! The epoch loop: scheduled single-instance Adam steps and dev-set model selection.

use serde::{Deserialize, Serialize};

use super::schedule::schedule_epoch;
use super::tasks::{Task, TaskEval};
use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::evaluation::MetricsReport;
use crate::model::Model;
use crate::numeric::{Adam, AdamConfig, Graph};

pub const DEFAULT_CLIP_NORM: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm bound; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub schedule_seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            adam: AdamConfig::default(),
            clip_norm: Some(DEFAULT_CLIP_NORM),
            schedule_seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    /// Weighted loss that was differentiated.
    pub loss: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: usize,
    pub train_loss: f64,
    pub metric: String,
    pub dev_value: Option<f64>,
    pub best: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best dev epoch (the last epoch without a dev set).
    pub model: Model,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_dev: Option<f64>,
    pub best_report: Option<MetricsReport>,
    pub history: Vec<EpochRecord>,
}

/// One forward/backward/update on a single example. Returns `None` when the
/// example carries no loss.
pub fn train_step(
    model: &mut Model,
    optimizer: &mut Adam,
    task: &Task,
    index: usize,
    table: &EmbeddingTable,
    clip_norm: Option<f64>,
) -> Result<Option<StepResult>> {
    if task.loss_weight == 0.0 {
        return Ok(None);
    }
    let Some(example) = task.example(index) else {
        return Ok(None);
    };
    let (loss, mut grads) = {
        let mut g = Graph::new();
        let raw = model.loss_graph(&mut g, &task.name, example, table, true)?;
        let value = g.value(raw).item();
        if !value.is_finite() {
            return Err(Error::NonFinite {
                instance: task.example_id(index),
                value,
            });
        }
        let scaled = g.scale(raw, task.loss_weight);
        let loss = g.value(scaled).item();
        (loss, g.backward(scaled)?.into_param_grads())
    };
    let grad_norm = grads.global_norm();
    if !grad_norm.is_finite() {
        return Err(Error::NonFinite {
            instance: task.example_id(index),
            value: grad_norm,
        });
    }
    if let Some(max) = clip_norm {
        grads.clip_global_norm(max);
    }
    optimizer.step(&mut model.params_mut(), &grads)?;
    Ok(Some(StepResult { loss, grad_norm }))
}

/// Trains every task in `tasks` jointly and selects the epoch that is best on
/// the dev set of `tasks[target]`. Ties keep the earlier epoch.
pub fn train(
    mut model: Model,
    tasks: &[Task],
    target: usize,
    table: &EmbeddingTable,
    options: &TrainOptions,
) -> Result<TrainOutcome> {
    if target >= tasks.len() {
        return Err(Error::Bounds {
            index: target,
            len: tasks.len(),
        });
    }
    for task in tasks {
        if model.decoder(&task.name).is_none() {
            return Err(Error::Config(format!("model has no decoder for task {:?}", task.name)));
        }
    }
    if table.dim() != model.encoder.input_dim() {
        return Err(Error::Config(format!(
            "embedding dimension {} does not match encoder input {}",
            table.dim(),
            model.encoder.input_dim()
        )));
    }
    let mut optimizer = Adam::new(options.adam);
    let sizes: Vec<usize> = tasks.iter().map(Task::train_len).collect();
    let mut best: Option<(usize, f64, Option<MetricsReport>, Model)> = None;
    let mut history = Vec::with_capacity(options.epochs);
    for epoch in 1..=options.epochs {
        let mut total = 0.0;
        let mut steps = 0;
        for (t, i) in schedule_epoch(&sizes, options.schedule_seed, epoch)? {
            if let Some(r) = train_step(&mut model, &mut optimizer, &tasks[t], i, table, options.clip_norm)? {
                total += r.loss;
                steps += 1;
            }
        }
        let train_loss = if steps == 0 { 0.0 } else { total / steps as f64 };
        let eval: Option<TaskEval> = tasks[target].evaluate_dev(&model, table, epoch)?;
        let mut record = EpochRecord {
            epoch,
            steps,
            train_loss,
            metric: String::new(),
            dev_value: None,
            best: false,
        };
        if let Some(e) = eval {
            record.metric = e.metric_name;
            record.dev_value = Some(e.value);
            if best.as_ref().is_none_or(|(_, v, _, _)| e.value > *v) {
                record.best = true;
                best = Some((epoch, e.value, e.report, model.clone()));
            }
        }
        log::info!(
            "epoch {epoch}: {steps} steps, train loss {train_loss:.4}, dev {} {:?}",
            record.metric,
            record.dev_value
        );
        history.push(record);
    }
    let has_dev = tasks[target].has_dev();
    if !has_dev {
        if let Some(last) = history.last_mut() {
            last.best = true;
        }
    }
    match best {
        Some((best_epoch, value, report, best_model)) if has_dev => Ok(TrainOutcome {
            model: best_model,
            best_epoch,
            best_dev: Some(value),
            best_report: report,
            history,
        }),
        _ => Ok(TrainOutcome {
            model,
            best_epoch: options.epochs,
            best_dev: None,
            best_report: None,
            history,
        }),
    }
}
