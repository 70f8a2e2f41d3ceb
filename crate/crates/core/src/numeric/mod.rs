//! Dense tensors, reverse-mode differentiation and the Adam optimizer.

mod adam;
mod graph;
mod param;
mod tensor;

pub use adam::{Adam, AdamConfig, Moments};
pub use graph::{Gradients, Graph, ParamGrads, Pointwise, Var};
pub use param::Param;
pub use tensor::{log_softmax, matmul, sigmoid, softmax, softplus, Tensor};
