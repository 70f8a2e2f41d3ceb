//! Adam with bias-corrected moment estimates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::ParamGrads;
use super::param::Param;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Number of updates applied to this parameter.
    pub step: u64,
}

/// Optimizer state. Moments are created lazily the first time a parameter
/// receives a gradient, and each parameter keeps its own step counter so
/// decoders that are only sampled some of the time are bias-corrected for the
/// updates they actually received.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    state: BTreeMap<String, Moments>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            state: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn moments(&self, name: &str) -> Option<&Moments> {
        self.state.get(name)
    }

    /// Applies one update to every parameter that has an entry in `grads`.
    ///
    /// Shapes are validated before any parameter is touched.
    pub fn step(&mut self, params: &mut [&mut Param], grads: &ParamGrads) -> Result<()> {
        for p in params.iter() {
            if let Some(g) = grads.get(p.name()) {
                if g.len() != p.value().len() {
                    return Err(Error::Dimension {
                        op: "adam_step",
                        lhs: p.shape().to_vec(),
                        rhs: vec![g.len()],
                    });
                }
                if let Some(m) = self.state.get(p.name()) {
                    if m.first.len() != g.len() {
                        return Err(Error::Dimension {
                            op: "adam_step",
                            lhs: vec![m.first.len()],
                            rhs: vec![g.len()],
                        });
                    }
                }
            }
        }

        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        for p in params.iter_mut() {
            let Some(g) = grads.get(p.name()) else {
                continue;
            };
            let moments = self
                .state
                .entry(p.name().to_string())
                .or_insert_with(|| Moments {
                    first: vec![0.0; g.len()],
                    second: vec![0.0; g.len()],
                    step: 0,
                });
            moments.step += 1;
            let t = moments.step as i32;
            let correction1 = 1.0 - beta1.powi(t);
            let correction2 = 1.0 - beta2.powi(t);
            let values = p.value_mut().data_mut();
            for i in 0..g.len() {
                let m = &mut moments.first[i];
                let v = &mut moments.second[i];
                *m = beta1 * *m + (1.0 - beta1) * g[i];
                *v = beta2 * *v + (1.0 - beta2) * g[i] * g[i];
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                values[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Tensor;

    fn scalar_param(v: f64) -> Param {
        Param::new("w", Tensor::scalar(v))
    }

    fn grads(g: f64) -> ParamGrads {
        let mut pg = ParamGrads::default();
        pg.0.insert("w".into(), vec![g]);
        pg
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut p = scalar_param(1.5);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&mut [&mut p], &grads(0.0)).unwrap();
        assert_eq!(p.value().item(), 1.5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [0.3, -2.0, 1e-3] {
            let mut p = scalar_param(0.0);
            let mut adam = Adam::new(AdamConfig::default());
            adam.step(&mut [&mut p], &grads(g)).unwrap();
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((p.value().item() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected_before_update() {
        let mut p = Param::new("w", Tensor::vector(vec![1.0, 2.0]));
        let mut adam = Adam::new(AdamConfig::default());
        let mut pg = ParamGrads::default();
        pg.0.insert("w".into(), vec![1.0]);
        assert!(matches!(
            adam.step(&mut [&mut p], &pg),
            Err(Error::Dimension { .. })
        ));
        assert_eq!(p.value().data(), &[1.0, 2.0]);
    }

    #[test]
    fn step_counter_increments_per_update() {
        let mut p = scalar_param(0.0);
        let mut adam = Adam::new(AdamConfig::default());
        for expected in 1..=3 {
            adam.step(&mut [&mut p], &grads(0.5)).unwrap();
            assert_eq!(adam.moments("w").unwrap().step, expected);
        }
    }
}
