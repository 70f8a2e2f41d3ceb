//! Shared encoder plus named task decoders.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingTable, Instance, Label, PropertyCatalog};
use crate::decoders::mt::{mt_loss_graph, MtDecoderParams, TargetVocab};
use crate::decoders::propbank::{propbank_log_probs_graph, propbank_loss_graph, PropBankDecoderParams};
use crate::decoders::spr::{label_loss_graph, spr_scores_graph, Activation, SprDecoderParams};
use crate::decoders::supersense::{
    supersense_log_probs_graph, supersense_loss_graph, SupersenseDecoderParams,
};
use crate::encoder::{embed, encode_graph, pair_state_graph, EncoderParams};
use crate::error::{Error, Result};
use crate::numeric::{Graph, Param, Var};
use crate::seeds::module_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    /// Per-direction encoder width `d`.
    pub hidden_dim: usize,
    /// Width `m` of the shared SPR layer.
    pub shared_dim: usize,
    pub activation: Activation,
    pub mt_layers: usize,
    pub mt_embedding_dim: usize,
    pub mt_vocab_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 300,
            hidden_dim: 600,
            shared_dim: 300,
            activation: Activation::Relu,
            mt_layers: 2,
            mt_embedding_dim: 300,
            mt_vocab_size: 20000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decoder {
    Spr(SprDecoderParams),
    PropBank(PropBankDecoderParams),
    Supersense(SupersenseDecoderParams),
    Mt {
        params: MtDecoderParams,
        vocab: TargetVocab,
    },
}

impl Decoder {
    pub fn kind(&self) -> &'static str {
        match self {
            Decoder::Spr(_) => "spr",
            Decoder::PropBank(_) => "propbank",
            Decoder::Supersense(_) => "supersense",
            Decoder::Mt { .. } => "mt",
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Decoder::Spr(p) => p.params(),
            Decoder::PropBank(p) => p.params(),
            Decoder::Supersense(p) => p.params(),
            Decoder::Mt { params, .. } => params.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Decoder::Spr(p) => p.params_mut(),
            Decoder::PropBank(p) => p.params_mut(),
            Decoder::Supersense(p) => p.params_mut(),
            Decoder::Mt { params, .. } => params.params_mut(),
        }
    }
}

/// One training or evaluation example, borrowed from its dataset.
#[derive(Clone, Copy, Debug)]
pub enum Example<'d> {
    /// Property labels with per-property loss weights.
    Spr {
        instance: &'d Instance,
        labels: &'d [Option<Label>],
        weights: &'d [f64],
    },
    PropBank(&'d Instance),
    Supersense(&'d Instance),
    Mt {
        source: &'d [String],
        target: &'d [usize],
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub encoder: EncoderParams,
    pub decoders: Vec<(String, Decoder)>,
}

pub fn decoder_prefix(task: &str) -> String {
    format!("decoder.{task}")
}

impl Model {
    /// Fresh encoder; each module draws from its own seeded stream.
    pub fn new(config: ModelConfig, init_seed: u64) -> Self {
        let encoder = EncoderParams::new(
            config.embedding_dim,
            config.hidden_dim,
            &mut module_rng(init_seed, "encoder"),
        );
        Model {
            config,
            encoder,
            decoders: Vec::new(),
        }
    }

    fn insert(&mut self, task: &str, decoder: Decoder) -> Result<()> {
        if self.decoder(task).is_some() {
            return Err(Error::Config(format!("duplicate decoder for task {task:?}")));
        }
        self.decoders.push((task.to_string(), decoder));
        Ok(())
    }

    pub fn add_spr(&mut self, task: &str, catalog: PropertyCatalog, init_seed: u64) -> Result<()> {
        let prefix = decoder_prefix(task);
        let d = SprDecoderParams::new(
            &prefix,
            2 * self.encoder.state_dim(),
            self.config.shared_dim,
            catalog,
            self.config.activation,
            &mut module_rng(init_seed, &prefix),
        );
        self.insert(task, Decoder::Spr(d))
    }

    pub fn add_propbank(&mut self, task: &str, init_seed: u64) -> Result<()> {
        let prefix = decoder_prefix(task);
        let d = PropBankDecoderParams::new(
            &prefix,
            2 * self.encoder.state_dim(),
            &mut module_rng(init_seed, &prefix),
        );
        self.insert(task, Decoder::PropBank(d))
    }

    pub fn add_supersense(&mut self, task: &str, init_seed: u64) -> Result<()> {
        let prefix = decoder_prefix(task);
        let d = SupersenseDecoderParams::new(
            &prefix,
            self.encoder.state_dim(),
            &mut module_rng(init_seed, &prefix),
        );
        self.insert(task, Decoder::Supersense(d))
    }

    pub fn add_mt(&mut self, task: &str, vocab: TargetVocab, init_seed: u64) -> Result<()> {
        let prefix = decoder_prefix(task);
        let params = MtDecoderParams::new(
            &prefix,
            vocab.len(),
            self.config.mt_embedding_dim,
            self.encoder.hidden_dim(),
            self.encoder.state_dim(),
            self.config.mt_layers,
            &mut module_rng(init_seed, &prefix),
        )?;
        self.insert(task, Decoder::Mt { params, vocab })
    }

    pub fn decoder(&self, task: &str) -> Option<&Decoder> {
        self.decoders.iter().find(|(n, _)| n == task).map(|(_, d)| d)
    }

    pub fn remove_decoder(&mut self, task: &str) -> Option<Decoder> {
        let i = self.decoders.iter().position(|(n, _)| n == task)?;
        Some(self.decoders.remove(i).1)
    }

    fn require(&self, task: &str) -> Result<&Decoder> {
        self.decoder(task)
            .ok_or_else(|| Error::Contract(format!("model has no decoder for task {task:?}")))
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = self.encoder.params();
        for (_, d) in &self.decoders {
            v.extend(d.params());
        }
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.encoder.params_mut();
        for (_, d) in &mut self.decoders {
            v.extend(d.params_mut());
        }
        v
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|p| p.value().len()).sum()
    }

    /// Builds the loss for one example. With `trainable` the encoder and the
    /// task's decoder are bound as parameters; other decoders stay out of the graph.
    pub fn loss_graph<'a>(
        &'a self,
        g: &mut Graph<'a>,
        task: &str,
        example: Example<'_>,
        table: &EmbeddingTable,
        trainable: bool,
    ) -> Result<Var> {
        let decoder = self.require(task)?;
        let enc = self.encoder.bind(g, trainable);
        match (decoder, example) {
            (
                Decoder::Spr(p),
                Example::Spr {
                    instance,
                    labels,
                    weights,
                },
            ) => {
                let vars = p.bind(g, trainable);
                let inputs = embed(g, &instance.tokens, table);
                let states = encode_graph(g, &enc, &inputs)?.states;
                let h = pair_state_graph(g, &states, instance.pred_head, instance.arg_head)?;
                let scores = spr_scores_graph(g, &vars, h)?;
                label_loss_graph(g, scores, labels, weights)
            }
            (Decoder::PropBank(p), Example::PropBank(instance)) => {
                let gold = instance.propbank_role.ok_or_else(|| {
                    Error::data(format!("instance {} has no PropBank role", instance.id()))
                })?;
                let vars = p.bind(g, trainable);
                let inputs = embed(g, &instance.tokens, table);
                let states = encode_graph(g, &enc, &inputs)?.states;
                let h = pair_state_graph(g, &states, instance.pred_head, instance.arg_head)?;
                let lp = propbank_log_probs_graph(g, vars, h)?;
                propbank_loss_graph(g, lp, gold)
            }
            (Decoder::Supersense(p), Example::Supersense(instance)) => {
                let gold = instance.supersense.as_ref().ok_or_else(|| {
                    Error::data(format!("instance {} has no supersense labels", instance.id()))
                })?;
                let vars = p.bind(g, trainable);
                let inputs = embed(g, &instance.tokens, table);
                let states = encode_graph(g, &enc, &inputs)?.states;
                let h_a = *states.get(instance.arg_head).ok_or(Error::Bounds {
                    index: instance.arg_head,
                    len: states.len(),
                })?;
                let lp = supersense_log_probs_graph(g, vars, h_a)?;
                supersense_loss_graph(g, lp, gold.probs())
            }
            (Decoder::Mt { params, .. }, Example::Mt { source, target }) => {
                let vars = params.bind(g, trainable);
                let inputs = embed(g, source, table);
                let encoded = encode_graph(g, &enc, &inputs)?;
                mt_loss_graph(g, &vars, &encoded, target)
            }
            (d, _) => Err(Error::Contract(format!(
                "example does not match the {} decoder of task {task:?}",
                d.kind()
            ))),
        }
    }

    /// Forward-only loss for one example.
    pub fn loss(&self, task: &str, example: Example<'_>, table: &EmbeddingTable) -> Result<f64> {
        let mut g = Graph::new();
        let loss = self.loss_graph(&mut g, task, example, table, false)?;
        Ok(g.value(loss).item())
    }

    /// Per-instance SPR scores, in catalog order.
    pub fn spr_scores(&self, task: &str, instances: &[Instance], table: &EmbeddingTable) -> Result<Vec<Vec<f64>>> {
        let Decoder::Spr(p) = self.require(task)? else {
            return Err(Error::Contract(format!("task {task:?} is not an SPR task")));
        };
        instances
            .par_iter()
            .map(|inst| {
                let mut g = Graph::new();
                let enc = self.encoder.bind(&mut g, false);
                let vars = p.bind(&mut g, false);
                let inputs = embed(&mut g, &inst.tokens, table);
                let states = encode_graph(&mut g, &enc, &inputs)?.states;
                let h = pair_state_graph(&mut g, &states, inst.pred_head, inst.arg_head)?;
                let s = spr_scores_graph(&mut g, &vars, h)?;
                Ok(g.data(s).to_vec())
            })
            .collect()
    }

    /// Per-instance role distributions.
    pub fn propbank_distributions(&self, task: &str, instances: &[Instance], table: &EmbeddingTable) -> Result<Vec<Vec<f64>>> {
        let Decoder::PropBank(p) = self.require(task)? else {
            return Err(Error::Contract(format!("task {task:?} is not a PropBank task")));
        };
        instances
            .par_iter()
            .map(|inst| {
                let mut g = Graph::new();
                let enc = self.encoder.bind(&mut g, false);
                let vars = p.bind(&mut g, false);
                let inputs = embed(&mut g, &inst.tokens, table);
                let states = encode_graph(&mut g, &enc, &inputs)?.states;
                let h = pair_state_graph(&mut g, &states, inst.pred_head, inst.arg_head)?;
                let lp = propbank_log_probs_graph(&mut g, vars, h)?;
                Ok(g.data(lp).iter().map(|v| v.exp()).collect())
            })
            .collect()
    }

    /// Mean loss over examples, computed in parallel and summed in order.
    pub fn mean_loss<'d>(&self, task: &str, examples: &[Example<'d>], table: &EmbeddingTable) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::Domain("mean loss over no examples".into()));
        }
        let losses: Vec<f64> = examples
            .par_iter()
            .map(|ex| self.loss(task, *ex, table))
            .collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ModelConfig {
        ModelConfig {
            embedding_dim: 4,
            hidden_dim: 3,
            shared_dim: 5,
            mt_embedding_dim: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn module_init_is_independent_of_other_modules() {
        let mut a = Model::new(small(), 9);
        a.add_propbank("pb", 9).unwrap();
        a.add_spr("spr1", PropertyCatalog::spr1(), 9).unwrap();
        let mut b = Model::new(small(), 9);
        b.add_spr("spr1", PropertyCatalog::spr1(), 9).unwrap();
        assert_eq!(a.encoder, b.encoder);
        assert_eq!(a.decoder("spr1"), b.decoder("spr1"));
    }

    #[test]
    fn duplicate_decoders_rejected() {
        let mut m = Model::new(small(), 1);
        m.add_propbank("pb", 1).unwrap();
        assert!(m.add_propbank("pb", 1).is_err());
        assert!(m.remove_decoder("pb").is_some());
        assert!(m.decoder("pb").is_none());
    }
}
