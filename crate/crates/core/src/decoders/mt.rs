//! Attention-based translation decoder used to pretrain the encoder.
//!
//! ```text
//! s_i   = RNN(y_{i-1}, s_{i-1})                        (L stacked LSTM layers)
//! α_i,t = softmax_t( s_iᵀ (W_α h_t + b_α) )             (top layer state)
//! c_i   = Σ_t α_i,t h_t
//! P(y_i) = softmax( tanh(W_fr [s_i; c_i] + b_fr) )
//! ```

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingTable;
use crate::encoder::{
    embed, encode_graph, lstm_cell_graph, EncoderParams, Encoded, HiddenStates, LstmParams, LstmVars,
};
use crate::error::{Error, Result};
use crate::numeric::{Graph, Param, Tensor, Var};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Target-side vocabulary; ids 0, 1, 2 are `<s>`, `</s>`, `<unk>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TargetVocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for TargetVocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TargetVocab { tokens, index }
    }
}

impl From<TargetVocab> for Vec<String> {
    fn from(v: TargetVocab) -> Self {
        v.tokens
    }
}

impl TargetVocab {
    pub const BOS_ID: usize = 0;
    pub const EOS_ID: usize = 1;
    pub const UNK_ID: usize = 2;

    /// The `cap − 3` most frequent tokens (ties broken alphabetically) plus the specials.
    pub fn build<'a>(sentences: impl IntoIterator<Item = &'a [String]>, cap: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for s in sentences {
            for t in s {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        for special in [BOS, EOS, UNK] {
            counts.remove(special);
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut tokens: Vec<String> = [BOS, EOS, UNK].iter().map(|s| s.to_string()).collect();
        tokens.extend(
            ranked
                .into_iter()
                .take(cap.saturating_sub(3))
                .map(|(t, _)| t.to_string()),
        );
        TargetVocab::from(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtDecoderParams {
    pub embedding: Param,
    pub layers: Vec<LstmParams>,
    pub w_alpha: Param,
    pub b_alpha: Param,
    pub w_out: Param,
    pub b_out: Param,
}

impl MtDecoderParams {
    /// `hidden_dim` must equal the encoder's per-direction width so the bottom
    /// layer can start from the encoder's last forward state.
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        vocab_size: usize,
        embedding_dim: usize,
        hidden_dim: usize,
        encoder_state_dim: usize,
        num_layers: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_layers == 0 {
            return Err(Error::Config("translation decoder needs at least one layer".into()));
        }
        let embedding = Tensor::uniform(&[vocab_size, embedding_dim], 0.1, rng);
        let layers = (0..num_layers)
            .map(|l| {
                let input = if l == 0 { embedding_dim } else { hidden_dim };
                LstmParams::new(&format!("{prefix}.layer{l}"), input, hidden_dim, rng)
            })
            .collect();
        let w_alpha = Tensor::uniform(
            &[hidden_dim, encoder_state_dim],
            1.0 / (encoder_state_dim as f64).sqrt(),
            rng,
        );
        let out_in = hidden_dim + encoder_state_dim;
        let w_out = Tensor::uniform(&[vocab_size, out_in], 1.0 / (out_in as f64).sqrt(), rng);
        Ok(MtDecoderParams {
            embedding: Param::new(format!("{prefix}.embedding"), embedding),
            layers,
            w_alpha: Param::new(format!("{prefix}.w_alpha"), w_alpha),
            b_alpha: Param::new(format!("{prefix}.b_alpha"), Tensor::zeros(&[hidden_dim])),
            w_out: Param::new(format!("{prefix}.w_out"), w_out),
            b_out: Param::new(format!("{prefix}.b_out"), Tensor::zeros(&[vocab_size])),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.shape()[0]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_alpha.shape()[0]
    }

    pub fn encoder_state_dim(&self) -> usize {
        self.w_alpha.shape()[1]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.embedding];
        for l in &self.layers {
            v.extend(l.params());
        }
        v.extend([&self.w_alpha, &self.b_alpha, &self.w_out, &self.b_out]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.embedding];
        for l in &mut self.layers {
            v.extend(l.params_mut());
        }
        v.extend([
            &mut self.w_alpha,
            &mut self.b_alpha,
            &mut self.w_out,
            &mut self.b_out,
        ]);
        v
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>, trainable: bool) -> MtVars {
        let bind = |g: &mut Graph<'a>, p: &'a Param| {
            if trainable {
                g.param(p)
            } else {
                g.constant_ref(p.value())
            }
        };
        MtVars {
            embedding: bind(g, &self.embedding),
            layers: self
                .layers
                .iter()
                .map(|l| if trainable { l.bind(g) } else { l.bind_frozen(g) })
                .collect(),
            w_alpha: bind(g, &self.w_alpha),
            b_alpha: bind(g, &self.b_alpha),
            w_out: bind(g, &self.w_out),
            b_out: bind(g, &self.b_out),
            vocab_size: self.vocab_size(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MtVars {
    pub embedding: Var,
    pub layers: Vec<LstmVars>,
    pub w_alpha: Var,
    pub b_alpha: Var,
    pub w_out: Var,
    pub b_out: Var,
    pub vocab_size: usize,
}

/// Encoder states prepared for attention: projected keys and raw values.
#[derive(Clone, Copy, Debug)]
pub struct AttentionMemory {
    /// Row `t` is `W_α h_t + b_α`.
    pub keys: Var,
    /// Row `t` is `h_t`.
    pub values: Var,
}

pub fn attention_memory(g: &mut Graph<'_>, p: &MtVars, states: &[Var]) -> Result<AttentionMemory> {
    if states.is_empty() {
        return Err(Error::Domain("attention over an empty sequence".into()));
    }
    let keys = states
        .iter()
        .map(|h| {
            let k = g.matvec(p.w_alpha, *h)?;
            g.add(k, p.b_alpha)
        })
        .collect::<Result<Vec<_>>>()?;
    let keys = g.stack(&keys)?;
    let values = g.stack(states)?;
    Ok(AttentionMemory { keys, values })
}

/// Returns `(context, weights)`.
pub fn attention_graph(g: &mut Graph<'_>, mem: &AttentionMemory, s: Var) -> Result<(Var, Var)> {
    let logits = g.matvec(mem.keys, s)?;
    let alpha = g.softmax(logits)?;
    let ctx = g.vecmat(alpha, mem.values)?;
    Ok((ctx, alpha))
}

/// Decoder state at step 0: the bottom layer's `h` is the encoder's last
/// forward state; everything else starts at zero.
pub fn initial_state_graph(g: &mut Graph<'_>, p: &MtVars, last_forward: Var) -> Result<Vec<(Var, Var)>> {
    let d = p.layers[0].hidden;
    if g.value(last_forward).len() != d {
        return Err(Error::Dimension {
            op: "mt_initial_state",
            lhs: vec![d],
            rhs: g.shape(last_forward).to_vec(),
        });
    }
    let mut out = Vec::with_capacity(p.layers.len());
    for l in 0..p.layers.len() {
        let h = if l == 0 {
            last_forward
        } else {
            g.constant(Tensor::zeros(&[d]))
        };
        let c = g.constant(Tensor::zeros(&[d]));
        out.push((h, c));
    }
    Ok(out)
}

/// Output of one decoding step inside a graph.
pub struct StepOutput {
    pub state: Vec<(Var, Var)>,
    pub log_probs: Var,
    pub alpha: Var,
}

pub fn mt_step_graph(
    g: &mut Graph<'_>,
    p: &MtVars,
    mem: &AttentionMemory,
    y_prev: usize,
    state: &[(Var, Var)],
) -> Result<StepOutput> {
    if state.len() != p.layers.len() {
        return Err(Error::Dimension {
            op: "mt_step",
            lhs: vec![p.layers.len()],
            rhs: vec![state.len()],
        });
    }
    let y = if y_prev < p.vocab_size {
        y_prev
    } else {
        TargetVocab::UNK_ID
    };
    let mut x = g.row(p.embedding, y)?;
    let mut next = Vec::with_capacity(state.len());
    for (lstm, (h, c)) in p.layers.iter().zip(state) {
        let (h2, c2) = lstm_cell_graph(g, lstm, x, *h, *c)?;
        next.push((h2, c2));
        x = h2;
    }
    let (ctx, alpha) = attention_graph(g, mem, x)?;
    let joined = g.concat(&[x, ctx])?;
    let z = g.matvec(p.w_out, joined)?;
    let z = g.add(z, p.b_out)?;
    let z = g.tanh(z);
    let log_probs = g.log_softmax(z)?;
    Ok(StepOutput {
        state: next,
        log_probs,
        alpha,
    })
}

/// Teacher-forced `Σ_i −log P(reference_i)`; `<s>` is fed first.
pub fn mt_loss_graph(g: &mut Graph<'_>, p: &MtVars, encoded: &Encoded, reference: &[usize]) -> Result<Var> {
    if reference.is_empty() {
        return Err(Error::Domain("empty reference sequence".into()));
    }
    let mem = attention_memory(g, p, &encoded.states)?;
    let mut state = initial_state_graph(g, p, encoded.last_forward())?;
    let mut prev = TargetVocab::BOS_ID;
    let mut terms = Vec::with_capacity(reference.len());
    for &y in reference {
        let step = mt_step_graph(g, p, &mem, prev, &state)?;
        let y = if y < p.vocab_size { y } else { TargetVocab::UNK_ID };
        terms.push(g.pick(step.log_probs, y)?);
        state = step.state;
        prev = y;
    }
    let all = g.concat(&terms)?;
    let total = g.sum(all);
    Ok(g.scale(total, -1.0))
}

fn memory_from_states<'a>(
    g: &mut Graph<'a>,
    vars: &MtVars,
    states: &HiddenStates,
    params: &MtDecoderParams,
) -> Result<AttentionMemory> {
    if states.is_empty() {
        return Err(Error::Domain("attention over an empty sequence".into()));
    }
    if states.state(0).len() != params.encoder_state_dim() {
        return Err(Error::Dimension {
            op: "attention",
            lhs: vec![params.encoder_state_dim()],
            rhs: vec![states.state(0).len()],
        });
    }
    let hs: Vec<Var> = states
        .states()
        .iter()
        .map(|h| g.constant(Tensor::vector(h.clone())))
        .collect();
    attention_memory(g, vars, &hs)
}

/// Context vector and attention weights for decoder state `s`.
pub fn attention(s: &[f64], states: &HiddenStates, params: &MtDecoderParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let mem = memory_from_states(&mut g, &vars, states, params)?;
    if s.len() != params.hidden_dim() {
        return Err(Error::Dimension {
            op: "attention",
            lhs: vec![params.hidden_dim()],
            rhs: vec![s.len()],
        });
    }
    let sv = g.constant(Tensor::vector(s.to_vec()));
    let (ctx, alpha) = attention_graph(&mut g, &mem, sv)?;
    Ok((g.data(ctx).to_vec(), g.data(alpha).to_vec()))
}

/// Per-layer `(h, c)` of the decoder.
pub type DecoderState = Vec<(Vec<f64>, Vec<f64>)>;

pub fn mt_initial_state(states: &HiddenStates, params: &MtDecoderParams) -> Result<DecoderState> {
    let d = params.hidden_dim();
    if states.last_forward().len() != d {
        return Err(Error::Dimension {
            op: "mt_initial_state",
            lhs: vec![d],
            rhs: vec![states.last_forward().len()],
        });
    }
    Ok((0..params.num_layers())
        .map(|l| {
            let h = if l == 0 {
                states.last_forward().to_vec()
            } else {
                vec![0.0; d]
            };
            (h, vec![0.0; d])
        })
        .collect())
}

/// One decoding step on detached values: new state and token distribution.
pub fn mt_step(
    y_prev: usize,
    s_prev: &DecoderState,
    states: &HiddenStates,
    params: &MtDecoderParams,
) -> Result<(DecoderState, Vec<f64>)> {
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let mem = memory_from_states(&mut g, &vars, states, params)?;
    let state: Vec<(Var, Var)> = s_prev
        .iter()
        .map(|(h, c)| {
            (
                g.constant(Tensor::vector(h.clone())),
                g.constant(Tensor::vector(c.clone())),
            )
        })
        .collect();
    let out = mt_step_graph(&mut g, &vars, &mem, y_prev, &state)?;
    let next = out
        .state
        .iter()
        .map(|(h, c)| (g.data(*h).to_vec(), g.data(*c).to_vec()))
        .collect();
    let dist = g.data(out.log_probs).iter().map(|v| v.exp()).collect();
    Ok((next, dist))
}

/// Teacher-forced negative log-likelihood of `reference` given `source`.
/// Reference tokens outside the vocabulary count as `<unk>`.
pub fn mt_sequence_loss(
    source: &[String],
    reference: &[String],
    table: &EmbeddingTable,
    encoder: &EncoderParams,
    params: &MtDecoderParams,
    vocab: &TargetVocab,
) -> Result<f64> {
    let mut g = Graph::new();
    let enc_vars = encoder.bind(&mut g, false);
    let vars = params.bind(&mut g, false);
    let inputs = embed(&mut g, source, table);
    let encoded = encode_graph(&mut g, &enc_vars, &inputs)?;
    let loss = mt_loss_graph(&mut g, &vars, &encoded, &vocab.encode(reference))?;
    Ok(g.value(loss).item())
}

/// Greedy decoding up to `max_len` tokens, stopping at `</s>`.
pub fn greedy_decode(
    source: &[String],
    table: &EmbeddingTable,
    encoder: &EncoderParams,
    params: &MtDecoderParams,
    vocab: &TargetVocab,
    max_len: usize,
) -> Result<Vec<String>> {
    let states = crate::encoder::encode(source, table, encoder)?;
    let mut state = mt_initial_state(&states, params)?;
    let mut prev = TargetVocab::BOS_ID;
    let mut out = Vec::new();
    for _ in 0..max_len {
        let (next, dist) = mt_step(prev, &state, &states, params)?;
        let best = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if *p > acc.1 { (i, *p) } else { acc })
            .0;
        if best == TargetVocab::EOS_ID {
            break;
        }
        out.push(vocab.token(best).to_string());
        state = next;
        prev = best;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn vocab_orders_by_frequency_and_caps() {
        let a = toks("b a a c");
        let b = toks("a b d");
        let v = TargetVocab::build([a.as_slice(), b.as_slice()], 5);
        assert_eq!(v.len(), 5);
        assert_eq!(v.token(3), "a");
        assert_eq!(v.token(4), "b");
        assert_eq!(v.id("c"), TargetVocab::UNK_ID);
        assert_eq!(v.id(BOS), TargetVocab::BOS_ID);
    }

    #[test]
    fn zero_output_gives_uniform_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = MtDecoderParams::new("mt", 2, 3, 2, 4, 1, &mut rng).unwrap();
        p.w_out.value_mut().data_mut().fill(0.0);
        let hs = HiddenStates::new(vec![vec![0.1, 0.2, 0.3, 0.4]], vec![0.1, 0.2]);
        let s0 = mt_initial_state(&hs, &p).unwrap();
        assert_eq!(s0[0].0, vec![0.1, 0.2]);
        let (_, dist) = mt_step(0, &s0, &hs, &p).unwrap();
        assert!((dist[0] - 0.5).abs() < 1e-15 && (dist[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_state_attention_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = MtDecoderParams::new("mt", 4, 3, 2, 4, 2, &mut rng).unwrap();
        let hs = HiddenStates::new(vec![vec![0.5, -0.2, 0.3, 0.9]], vec![0.1, 0.2]);
        let (ctx, alpha) = attention(&[0.3, -0.7], &hs, &p).unwrap();
        assert_eq!(alpha, vec![1.0]);
        assert_eq!(ctx, vec![0.5, -0.2, 0.3, 0.9]);
        let empty = HiddenStates::new(vec![], vec![]);
        assert!(matches!(attention(&[0.3, -0.7], &empty, &p), Err(Error::Domain(_))));
    }
}
