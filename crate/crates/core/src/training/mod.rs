//! Training regimes, model selection, checkpoints and the data-fraction ablation.

pub mod ablation;
pub mod checkpoint;
pub mod experiment;
pub mod schedule;
pub mod tasks;
pub mod trainer;

pub use ablation::{ablation_run, AblationCell, AblationMode, AblationSpec, CurveRow, CO_TRAIN_LAMBDA};
pub use checkpoint::{Checkpoint, CheckpointHeader, EmbeddingMeta};
pub use experiment::{
    pretrain_then_finetune, ExperimentConfig, ExperimentOutcome, PreparedExperiment, Regime, Stage,
    LAMBDA_GRID,
};
pub use schedule::schedule_epoch;
pub use tasks::{mixing_weight, MtExamples, Role, Selection, Task, TaskData, TaskEval, TaskKind};
pub use trainer::{train, train_step, EpochRecord, StepResult, TrainOptions, TrainOutcome, DEFAULT_CLIP_NORM};
