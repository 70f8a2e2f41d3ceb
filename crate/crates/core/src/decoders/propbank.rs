//! Softmax over the abstract PropBank roles, read from the pair state.

use rand::Rng;

use crate::data::PROPBANK_LABELS;
use crate::error::{Error, Result};
use crate::numeric::{Graph, Param, Tensor, Var};

pub const NUM_ROLES: usize = PROPBANK_LABELS.len();

#[derive(Clone, Debug, PartialEq)]
pub struct PropBankDecoderParams {
    pub weight: Param,
    pub bias: Param,
}

impl PropBankDecoderParams {
    pub fn new<R: Rng + ?Sized>(prefix: &str, input_dim: usize, rng: &mut R) -> Self {
        let w = Tensor::uniform(&[NUM_ROLES, input_dim], 1.0 / (input_dim as f64).sqrt(), rng);
        Self::from_tensors(prefix, w, Tensor::zeros(&[NUM_ROLES]))
    }

    pub fn from_tensors(prefix: &str, weight: Tensor, bias: Tensor) -> Self {
        PropBankDecoderParams {
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

/// Log-probabilities of the roles.
pub fn propbank_log_probs_graph(g: &mut Graph<'_>, (w, b): (Var, Var), h_ea: Var) -> Result<Var> {
    let z = g.matvec(w, h_ea)?;
    let z = g.add(z, b)?;
    g.log_softmax(z)
}

/// `−log p(gold)`.
pub fn propbank_loss_graph(g: &mut Graph<'_>, log_probs: Var, gold: usize) -> Result<Var> {
    if gold >= NUM_ROLES {
        return Err(Error::Bounds {
            index: gold,
            len: NUM_ROLES,
        });
    }
    let lp = g.pick(log_probs, gold)?;
    Ok(g.scale(lp, -1.0))
}

/// Role distribution and the loss against `gold`.
pub fn propbank_forward(h_ea: &[f64], params: &PropBankDecoderParams, gold: usize) -> Result<(Vec<f64>, f64)> {
    if h_ea.len() != params.input_dim() {
        return Err(Error::Dimension {
            op: "propbank_forward",
            lhs: vec![params.input_dim()],
            rhs: vec![h_ea.len()],
        });
    }
    let mut g = Graph::new();
    let vars = params.bind(&mut g, false);
    let h = g.constant(Tensor::vector(h_ea.to_vec()));
    let lp = propbank_log_probs_graph(&mut g, vars, h)?;
    let loss = propbank_loss_graph(&mut g, lp, gold)?;
    let dist = g.data(lp).iter().map(|v| v.exp()).collect();
    Ok((dist, g.value(loss).item()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_are_uniform() {
        let p = PropBankDecoderParams::from_tensors(
            "pb",
            Tensor::zeros(&[NUM_ROLES, 4]),
            Tensor::zeros(&[NUM_ROLES]),
        );
        let (dist, loss) = propbank_forward(&[0.5, -1.0, 2.0, 0.0], &p, 3).unwrap();
        assert!(dist.iter().all(|v| (v - 1.0 / 16.0).abs() < 1e-15));
        assert!((loss - 16f64.ln()).abs() < 1e-12);
        assert!(matches!(
            propbank_forward(&[0.0; 4], &p, 16),
            Err(Error::Bounds { index: 16, len: 16 })
        ));
    }
}
