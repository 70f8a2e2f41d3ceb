//! Semantic proto-role labeling with a shared BiLSTM encoder and multi-task training.

pub mod cli;
pub mod data;
pub mod decoders;
pub mod encoder;
pub mod evaluation;
pub mod error;
pub mod model;
pub mod numeric;
pub mod seeds;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
