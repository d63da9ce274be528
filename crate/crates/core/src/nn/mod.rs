//! Small neural-network engine: conv1d, dense, activations, dropout,
//! reshape, exact reverse-mode gradients and Adam.

pub mod activation;
pub mod adam;
pub mod conv;
pub mod dense;
pub mod dropout;
mod gemm;
pub mod gradcheck;
pub mod network;

pub use activation::{apply_activation, Activation};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::conv1d_forward;
pub use dense::dense_forward;
pub use dropout::apply_dropout;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, ScalarLoss};
pub use network::{Gradients, LayerSpec, Mode, Network};
