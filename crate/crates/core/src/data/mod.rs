//! Dataset files, label construction and embeddings.

pub mod catalog;
pub mod dataset;
pub mod embeddings;
pub mod propbank;
pub mod rating;
pub mod record;
pub mod sampling;
pub mod supersense;

pub use catalog::{PropertyCatalog, SPR1_PROPERTIES, SPR2_PROPERTIES};
pub use dataset::{Dataset, Instance, ParallelCorpus, Resolvers, SentencePair};
pub use embeddings::{oov_vector, EmbeddingTable, OOV_RANGE};
pub use propbank::{map_propbank, FrameMap, PROPBANK_LABELS};
pub use rating::{
    binarize_scalar, map_binary, map_scalar, merge_redundant, Label, LabelMode, Rating,
};
pub use record::{LabelValue, Record};
pub use sampling::{is_standard_fraction, sample_fraction, sample_indices, STANDARD_FRACTIONS};
pub use supersense::{supersense_distribution, SenseMap, SupersenseDistribution, SUPERSENSES};
