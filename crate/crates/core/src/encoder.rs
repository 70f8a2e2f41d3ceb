//! One-layer bidirectional LSTM encoder and predicate-argument pair states.

use rand::Rng;

use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::numeric::{Graph, Param, Tensor, Var};

/// Weights of one LSTM direction. Gates are packed in the order
/// input, forget, candidate, output along the first axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub w_input: Param,
    pub w_hidden: Param,
    pub bias: Param,
}

pub const FORGET_BIAS: f64 = 1.0;

impl LstmParams {
    /// Weights uniform in ±1/√d, forget-gate bias 1, other biases 0.
    pub fn new<R: Rng + ?Sized>(prefix: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let s = 1.0 / (hidden_dim as f64).sqrt();
        let w_input = Tensor::uniform(&[4 * hidden_dim, input_dim], s, rng);
        let w_hidden = Tensor::uniform(&[4 * hidden_dim, hidden_dim], s, rng);
        let mut bias = Tensor::zeros(&[4 * hidden_dim]);
        bias.data_mut()[hidden_dim..2 * hidden_dim].fill(FORGET_BIAS);
        Self::from_tensors(prefix, w_input, w_hidden, bias)
    }

    pub fn zeros(prefix: &str, input_dim: usize, hidden_dim: usize) -> Self {
        Self::from_tensors(
            prefix,
            Tensor::zeros(&[4 * hidden_dim, input_dim]),
            Tensor::zeros(&[4 * hidden_dim, hidden_dim]),
            Tensor::zeros(&[4 * hidden_dim]),
        )
    }

    pub fn from_tensors(prefix: &str, w_input: Tensor, w_hidden: Tensor, bias: Tensor) -> Self {
        LstmParams {
            w_input: Param::new(format!("{prefix}.w_input"), w_input),
            w_hidden: Param::new(format!("{prefix}.w_hidden"), w_hidden),
            bias: Param::new(format!("{prefix}.bias"), bias),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.shape()[1]
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.shape()[1]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_input, &self.w_hidden, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_input, &mut self.w_hidden, &mut self.bias]
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>) -> LstmVars {
        LstmVars {
            w_input: g.param(&self.w_input),
            w_hidden: g.param(&self.w_hidden),
            bias: g.param(&self.bias),
            hidden: self.hidden_dim(),
        }
    }

    /// Binds the weights as constants (no gradients), for inference.
    pub fn bind_frozen<'a>(&'a self, g: &mut Graph<'a>) -> LstmVars {
        LstmVars {
            w_input: g.constant_ref(self.w_input.value()),
            w_hidden: g.constant_ref(self.w_hidden.value()),
            bias: g.constant_ref(self.bias.value()),
            hidden: self.hidden_dim(),
        }
    }
}

/// Graph handles for one bound LSTM direction.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub w_input: Var,
    pub w_hidden: Var,
    pub bias: Var,
    pub hidden: usize,
}

/// One LSTM step: returns `(h, c)`.
pub fn lstm_cell_graph(g: &mut Graph<'_>, p: &LstmVars, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
    let d = p.hidden;
    let wx = g.matvec(p.w_input, x)?;
    let wh = g.matvec(p.w_hidden, h)?;
    let pre = g.add(wx, wh)?;
    let pre = g.add(pre, p.bias)?;
    let i_pre = g.slice(pre, 0, d)?;
    let f_pre = g.slice(pre, d, d)?;
    let g_pre = g.slice(pre, 2 * d, d)?;
    let o_pre = g.slice(pre, 3 * d, d)?;
    let i = g.sigmoid(i_pre);
    let f = g.sigmoid(f_pre);
    let cand = g.tanh(g_pre);
    let o = g.sigmoid(o_pre);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_new = g.add(keep, write)?;
    let tc = g.tanh(c_new);
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// Forward-only LSTM step on plain vectors.
pub fn lstm_cell(params: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = params.hidden_dim();
    if x.len() != params.input_dim() || h_prev.len() != d || c_prev.len() != d {
        return Err(Error::Dimension {
            op: "lstm_cell",
            lhs: vec![params.input_dim(), d, d],
            rhs: vec![x.len(), h_prev.len(), c_prev.len()],
        });
    }
    let mut g = Graph::new();
    let vars = params.bind_frozen(&mut g);
    let xv = g.constant(Tensor::vector(x.to_vec()));
    let hv = g.constant(Tensor::vector(h_prev.to_vec()));
    let cv = g.constant(Tensor::vector(c_prev.to_vec()));
    let (h, c) = lstm_cell_graph(&mut g, &vars, xv, hv, cv)?;
    Ok((g.data(h).to_vec(), g.data(c).to_vec()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl EncoderParams {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let forward = LstmParams::new("encoder.forward", input_dim, hidden_dim, rng);
        let backward = LstmParams::new("encoder.backward", input_dim, hidden_dim, rng);
        EncoderParams { forward, backward }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim()
    }

    /// Width of one token state, `2d`.
    pub fn state_dim(&self) -> usize {
        2 * self.hidden_dim()
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = self.forward.params();
        v.extend(self.backward.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.forward.params_mut();
        v.extend(self.backward.params_mut());
        v
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>, trainable: bool) -> EncoderVars {
        if trainable {
            EncoderVars {
                forward: self.forward.bind(g),
                backward: self.backward.bind(g),
            }
        } else {
            EncoderVars {
                forward: self.forward.bind_frozen(g),
                backward: self.backward.bind_frozen(g),
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EncoderVars {
    pub forward: LstmVars,
    pub backward: LstmVars,
}

/// Per-token graph outputs of the encoder.
#[derive(Clone, Debug)]
pub struct Encoded {
    /// `[forward_h[t]; backward_h[t]]` for every token.
    pub states: Vec<Var>,
    pub forward: Vec<Var>,
    pub backward: Vec<Var>,
}

impl Encoded {
    /// Final left-to-right hidden state.
    pub fn last_forward(&self) -> Var {
        *self.forward.last().expect("encoded sentence is non-empty")
    }
}

/// Embeds tokens as constant leaves; the table is never trained.
pub fn embed(g: &mut Graph<'_>, tokens: &[String], table: &EmbeddingTable) -> Vec<Var> {
    tokens
        .iter()
        .map(|t| g.constant(Tensor::vector(table.vector(t).into_owned())))
        .collect()
}

pub fn encode_graph(g: &mut Graph<'_>, p: &EncoderVars, inputs: &[Var]) -> Result<Encoded> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::Domain("cannot encode an empty sentence".into()));
    }
    let d = p.forward.hidden;
    let run = |g: &mut Graph<'_>, lstm: &LstmVars, order: &mut dyn Iterator<Item = usize>| -> Result<Vec<Option<Var>>> {
        let mut h = g.constant(Tensor::zeros(&[d]));
        let mut c = g.constant(Tensor::zeros(&[d]));
        let mut out = vec![None; n];
        for t in order {
            let (h2, c2) = lstm_cell_graph(g, lstm, inputs[t], h, c)?;
            h = h2;
            c = c2;
            out[t] = Some(h);
        }
        Ok(out)
    };
    let forward: Vec<Var> = run(g, &p.forward, &mut (0..n))?
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let backward: Vec<Var> = run(g, &p.backward, &mut (0..n).rev())?
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let states = forward
        .iter()
        .zip(&backward)
        .map(|(f, b)| g.concat(&[*f, *b]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Encoded {
        states,
        forward,
        backward,
    })
}

/// `h_ea = [h_e; h_a]` inside a graph.
pub fn pair_state_graph(g: &mut Graph<'_>, states: &[Var], e: usize, a: usize) -> Result<Var> {
    let n = states.len();
    for i in [e, a] {
        if i >= n {
            return Err(Error::Bounds { index: i, len: n });
        }
    }
    g.concat(&[states[e], states[a]])
}

/// Encoder output for one sentence, detached from any graph.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStates {
    states: Vec<Vec<f64>>,
    last_forward: Vec<f64>,
}

impl HiddenStates {
    pub fn new(states: Vec<Vec<f64>>, last_forward: Vec<f64>) -> Self {
        HiddenStates {
            states,
            last_forward,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, t: usize) -> &[f64] {
        &self.states[t]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn last_forward(&self) -> &[f64] {
        &self.last_forward
    }
}

/// Encodes a token sequence with the given parameters (no gradients).
pub fn encode(tokens: &[String], table: &EmbeddingTable, params: &EncoderParams) -> Result<HiddenStates> {
    if table.dim() != params.input_dim() {
        return Err(Error::Dimension {
            op: "encode",
            lhs: vec![params.input_dim()],
            rhs: vec![table.dim()],
        });
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let inputs = embed(&mut g, tokens, table);
    let enc = encode_graph(&mut g, &vars, &inputs)?;
    Ok(HiddenStates {
        states: enc.states.iter().map(|v| g.data(*v).to_vec()).collect(),
        last_forward: g.data(enc.last_forward()).to_vec(),
    })
}

pub fn pair_state(states: &HiddenStates, e: usize, a: usize) -> Result<Vec<f64>> {
    let n = states.len();
    for i in [e, a] {
        if i >= n {
            return Err(Error::Bounds { index: i, len: n });
        }
    }
    let mut out = states.state(e).to_vec();
    out.extend_from_slice(states.state(a));
    Ok(out)
}
