//! Physics-informed convolutional autoencoder for detecting cyber attacks
//! on power distribution measurements.
//!
//! The crate covers the whole offline pipeline: synthetic or CSV-sourced
//! six-channel measurement series (`V, I, θ, δ, P, Q`), attack injection,
//! a small neural-network engine with exact gradients, the autoencoder
//! itself with its Kirchhoff-consistency loss, anomaly scoring and
//! thresholding, baselines, and experiment orchestration.

pub mod attacks;
pub mod baselines;
pub mod data;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod model;
pub mod nn;
pub mod tensor;

pub use error::{Error, ErrorClass, Result};
pub use tensor::Tensor;
