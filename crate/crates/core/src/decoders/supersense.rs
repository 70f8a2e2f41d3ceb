//! Supersense distribution predicted from the argument's state alone.

use rand::Rng;

use crate::data::{SupersenseDistribution, SUPERSENSES};
use crate::error::{Error, Result};
use crate::numeric::{Graph, Param, Tensor, Var};

pub const NUM_SUPERSENSES: usize = SUPERSENSES.len();

/// Allowed deviation of a gold distribution's total from 1.
pub const GOLD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SupersenseDecoderParams {
    pub weight: Param,
    pub bias: Param,
}

impl SupersenseDecoderParams {
    pub fn new<R: Rng + ?Sized>(prefix: &str, input_dim: usize, rng: &mut R) -> Self {
        let w = Tensor::uniform(
            &[NUM_SUPERSENSES, input_dim],
            1.0 / (input_dim as f64).sqrt(),
            rng,
        );
        Self::from_tensors(prefix, w, Tensor::zeros(&[NUM_SUPERSENSES]))
    }

    pub fn from_tensors(prefix: &str, weight: Tensor, bias: Tensor) -> Self {
        SupersenseDecoderParams {
            weight: Param::new(format!("{prefix}.weight"), weight),
            bias: Param::new(format!("{prefix}.bias"), bias),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }

    pub fn bind<'a>(&'a self, g: &mut Graph<'a>, trainable: bool) -> (Var, Var) {
        if trainable {
            (g.param(&self.weight), g.param(&self.bias))
        } else {
            (
                g.constant_ref(self.weight.value()),
                g.constant_ref(self.bias.value()),
            )
        }
    }
}

pub fn supersense_log_probs_graph(g: &mut Graph<'_>, (w, b): (Var, Var), h_a: Var) -> Result<Var> {
    let z = g.matvec(w, h_a)?;
    let z = g.add(z, b)?;
    g.log_softmax(z)
}

fn check_gold(gold: &[f64]) -> Result<()> {
    if gold.len() != NUM_SUPERSENSES {
        return Err(Error::Dimension {
            op: "supersense_loss",
            lhs: vec![NUM_SUPERSENSES],
            rhs: vec![gold.len()],
        });
    }
    let total: f64 = gold.iter().sum();
    if (total - 1.0).abs() > GOLD_TOLERANCE || gold.iter().any(|p| *p < 0.0) {
        return Err(Error::Contract(format!(
            "gold supersense distribution is not normalized (sum {total})"
        )));
    }
    Ok(())
}

/// Cross-entropy `−Σ_i gold_i · log predicted_i`.
pub fn supersense_loss_graph(g: &mut Graph<'_>, log_probs: Var, gold: &[f64]) -> Result<Var> {
    check_gold(gold)?;
    let gold = g.constant(Tensor::vector(gold.to_vec()));
    let ce = g.dot(gold, log_probs)?;
    Ok(g.scale(ce, -1.0))
}

/// Predicted distribution and cross-entropy against `gold`.
pub fn supersense_forward(
    h_a: &[f64],
    params: &SupersenseDecoderParams,
    gold: &SupersenseDistribution,
) -> Result<(Vec<f64>, f64)> {
    supersense_forward_raw(h_a, params, gold.probs())
}

/// As [`supersense_forward`], for a gold vector that has not been validated.
pub fn supersense_forward_raw(h_a: &[f64], params: &SupersenseDecoderParams, gold: &[f64]) -> Result<(Vec<f64>, f64)> {
    if h_a.len() != params.input_dim() {
        return Err(Error::Dimension {
            op: "supersense_forward",
            lhs: vec![params.input_dim()],
            rhs: vec![h_a.len()],
        });
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let h = g.constant(Tensor::vector(h_a.to_vec()));
    let lp = supersense_log_probs_graph(&mut g, vars, h)?;
    let loss = supersense_loss_graph(&mut g, lp, gold)?;
    let dist = g.data(lp).iter().map(|v| v.exp()).collect();
    Ok((dist, g.value(loss).item()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(dim: usize) -> SupersenseDecoderParams {
        SupersenseDecoderParams::from_tensors(
            "ss",
            Tensor::zeros(&[NUM_SUPERSENSES, dim]),
            Tensor::zeros(&[NUM_SUPERSENSES]),
        )
    }

    #[test]
    fn one_hot_against_uniform() {
        let mut gold = vec![0.0; NUM_SUPERSENSES];
        gold[4] = 1.0;
        let (_, loss) = supersense_forward_raw(&[1.0, 2.0], &zero_params(2), &gold).unwrap();
        assert!((loss - 26f64.ln()).abs() < 1e-12);
        assert!((loss - 3.2580965).abs() < 1e-7);
    }

    #[test]
    fn unnormalized_gold_is_rejected() {
        let gold = vec![0.5; NUM_SUPERSENSES];
        assert!(matches!(
            supersense_forward_raw(&[1.0, 2.0], &zero_params(2), &gold),
            Err(Error::Contract(_))
        ));
    }
}
