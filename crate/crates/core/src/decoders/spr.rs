//! Two-layer perceptron over the pair state, one output per property.
//!
//! `score(attr) = W_attr · g(W_shared · h_ea + b_shared) + b_attr`

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Label, PropertyCatalog};
use crate::error::{Error, Result};
use crate::numeric::{sigmoid, Graph, Param, Tensor, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SprDecoderParams {
    pub w_shared: Param,
    pub b_shared: Param,
    pub w_attr: Param,
    pub b_attr: Param,
    pub activation: Activation,
    pub catalog: PropertyCatalog,
}

impl SprDecoderParams {
    /// Weights uniform in ±1/√fan_in; biases zero.
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        input_dim: usize,
        shared_dim: usize,
        catalog: PropertyCatalog,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let w_shared = Tensor::uniform(&[shared_dim, input_dim], 1.0 / (input_dim as f64).sqrt(), rng);
        let w_attr = Tensor::uniform(
            &[catalog.len(), shared_dim],
            1.0 / (shared_dim as f64).sqrt(),
            rng,
        );
        Self::from_tensors(
            prefix,
            w_shared,
            Tensor::zeros(&[shared_dim]),
            w_attr,
            Tensor::zeros(&[catalog.len()]),
            activation,
            catalog,
        )
    }

    pub fn from_tensors(
        prefix: &str,
        w_shared: Tensor,
        b_shared: Tensor,
        w_attr: Tensor,
        b_attr: Tensor,
        activation: Activation,
        catalog: PropertyCatalog,
    ) -> Self {
        SprDecoderParams {
            w_shared: Param::new(format!("{prefix}.w_shared"), w_shared),
            b_shared: Param::new(format!("{prefix}.b_shared"), b_shared),
            w_attr: Param::new(format!("{prefix}.w_attr"), w_attr),
            b_attr: Param::new(format!("{prefix}.b_attr"), b_attr),
            activation,
            catalog,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_shared.shape()[1]
    }

    pub fn shared_dim(&self) -> usize {
        self.w_shared.shape()[0]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_shared, &self.b_shared, &self.w_attr, &self.b_attr]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![
            &mut self.w_shared,
            &mut self.b_shared,
            &mut self.w_attr,
            &mut self.b_attr,
        ]
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>, trainable: bool) -> SprVars {
        let bind = |g: &mut Graph<'a>, p: &'a Param| {
            if trainable {
                g.param(p)
            } else {
                g.constant_ref(p.value())
            }
        };
        SprVars {
            w_shared: bind(g, &self.w_shared),
            b_shared: bind(g, &self.b_shared),
            w_attr: bind(g, &self.w_attr),
            b_attr: bind(g, &self.b_attr),
            activation: self.activation,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SprVars {
    pub w_shared: Var,
    pub b_shared: Var,
    pub w_attr: Var,
    pub b_attr: Var,
    pub activation: Activation,
}

/// Scores for every property; the hidden layer is computed once.
pub fn spr_scores_graph(g: &mut Graph<'_>, p: &SprVars, h_ea: Var) -> Result<Var> {
    let z = g.matvec(p.w_shared, h_ea)?;
    let z = g.add(z, p.b_shared)?;
    let hidden = match p.activation {
        Activation::Relu => g.relu(z),
        Activation::Tanh => g.tanh(z),
    };
    let s = g.matvec(p.w_attr, hidden)?;
    g.add(s, p.b_attr)
}

fn check_lengths(op: &str, scores: usize, labels: usize, weights: usize) -> Result<()> {
    if scores != labels || scores != weights {
        return Err(Error::Contract(format!(
            "{op}: {scores} scores, {labels} labels, {weights} weights"
        )));
    }
    Ok(())
}

/// `Σ_p w_p · −log p(label_p)`, written as softplus of the signed score.
/// Unlabeled properties contribute nothing.
pub fn binary_loss_graph(
    g: &mut Graph<'_>,
    scores: Var,
    labels: &[Option<bool>],
    weights: &[f64],
) -> Result<Var> {
    check_lengths("binary_loss", g.value(scores).len(), labels.len(), weights.len())?;
    let sign: Vec<f64> = labels
        .iter()
        .map(|l| match l {
            Some(true) => -1.0,
            Some(false) => 1.0,
            None => 0.0,
        })
        .collect();
    let w: Vec<f64> = labels
        .iter()
        .zip(weights)
        .map(|(l, w)| if l.is_some() { *w } else { 0.0 })
        .collect();
    let sign = g.constant(Tensor::vector(sign));
    let w = g.constant(Tensor::vector(w));
    let signed = g.mul(scores, sign)?;
    let nll = g.softplus(signed);
    let weighted = g.mul(nll, w)?;
    Ok(g.sum(weighted))
}

/// `Σ_p w_p · (score_p − target_p)²` over labeled properties.
pub fn scalar_loss_graph(
    g: &mut Graph<'_>,
    scores: Var,
    targets: &[Option<f64>],
    weights: &[f64],
) -> Result<Var> {
    check_lengths("scalar_loss", g.value(scores).len(), targets.len(), weights.len())?;
    let t: Vec<f64> = targets.iter().map(|t| t.unwrap_or(0.0)).collect();
    let w: Vec<f64> = targets
        .iter()
        .zip(weights)
        .map(|(t, w)| if t.is_some() { *w } else { 0.0 })
        .collect();
    let t = g.constant(Tensor::vector(t));
    let w = g.constant(Tensor::vector(w));
    let diff = g.sub(scores, t)?;
    let sq = g.square(diff);
    let weighted = g.mul(sq, w)?;
    Ok(g.sum(weighted))
}

/// Loss for mixed labels; every label must match the decoder's mode.
pub fn label_loss_graph(
    g: &mut Graph<'_>,
    scores: Var,
    labels: &[Option<Label>],
    weights: &[f64],
) -> Result<Var> {
    if labels.iter().flatten().all(|l| matches!(l, Label::Binary(_))) {
        let b: Vec<Option<bool>> = labels.iter().map(|l| l.and_then(Label::as_bool)).collect();
        binary_loss_graph(g, scores, &b, weights)
    } else if labels.iter().flatten().all(|l| matches!(l, Label::Scalar(_))) {
        let s: Vec<Option<f64>> = labels.iter().map(|l| l.and_then(Label::as_scalar)).collect();
        scalar_loss_graph(g, scores, &s, weights)
    } else {
        Err(Error::Contract("mixed binary and scalar labels".into()))
    }
}

/// Scores for a detached pair state.
pub fn spr_scores(h_ea: &[f64], params: &SprDecoderParams) -> Result<Vec<f64>> {
    if h_ea.len() != params.input_dim() {
        return Err(Error::Dimension {
            op: "spr_scores",
            lhs: vec![params.input_dim()],
            rhs: vec![h_ea.len()],
        });
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let h = g.constant(Tensor::vector(h_ea.to_vec()));
    let s = spr_scores_graph(&mut g, &vars, h)?;
    Ok(g.data(s).to_vec())
}

/// Probability that the property holds.
pub fn binary_prob(score: f64) -> f64 {
    sigmoid(score)
}

pub fn binary_loss(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let mut g = Graph::new();
    let s = g.constant(Tensor::vector(scores.to_vec()));
    let l: Vec<Option<bool>> = labels.iter().map(|b| Some(*b)).collect();
    let loss = binary_loss_graph(&mut g, s, &l, &vec![1.0; labels.len()])?;
    Ok(g.value(loss).item())
}

pub fn scalar_loss(scores: &[f64], targets: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let s = g.constant(Tensor::vector(scores.to_vec()));
    let t: Vec<Option<f64>> = targets.iter().map(|x| Some(*x)).collect();
    let loss = scalar_loss_graph(&mut g, s, &t, &vec![1.0; targets.len()])?;
    Ok(g.value(loss).item())
}
