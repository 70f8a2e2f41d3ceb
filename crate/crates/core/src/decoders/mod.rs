//! Prediction heads over encoder states.

pub mod mt;
pub mod propbank;
pub mod spr;
pub mod supersense;

pub use mt::{
    attention, greedy_decode, mt_initial_state, mt_sequence_loss, mt_step, DecoderState,
    MtDecoderParams, TargetVocab,
};
pub use propbank::{propbank_forward, PropBankDecoderParams, NUM_ROLES};
pub use spr::{
    binary_loss, binary_prob, scalar_loss, spr_scores, Activation, SprDecoderParams,
};
pub use supersense::{supersense_forward, SupersenseDecoderParams, NUM_SUPERSENSES};
