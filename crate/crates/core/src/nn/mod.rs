//! Dense neural networks from first principles: forward and backward passes,
//! Adam, Xavier initialisation and finite-difference gradient checking.
//!
//! All arithmetic is `f64`; batches are matrices with one row per item.

mod adam;
mod gradcheck;
mod layer;
mod matrix;
mod network;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use gradcheck::{
    grad_check, grad_check_with, LinearLoss, Loss, SquaredError, MAX_CHECKED_PARAMETERS,
};
pub use layer::{Activation, DenseLayer, LayerGradients, LEAKY_RELU_SLOPE};
pub use matrix::Matrix;
pub use network::{init_network, ForwardCache, Gradients, MlpNetwork};
