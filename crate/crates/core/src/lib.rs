//! Numerical building blocks for structure-guided image inpainting: tensors
//! and gradients, masking positional encodings, line and edge priors, network
//! blocks, and the training losses.

pub mod autodiff;
pub mod blocks;
pub mod cli;
pub mod config;
pub mod error;
pub mod init;
pub mod io;
pub mod losses;
pub mod mpe;
pub mod priors;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
