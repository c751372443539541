//! Minimal tensor operations with hand-written reverse-mode gradients for
//! the fixed set of layers the denoiser uses, plus AdamW, the cosine
//! learning-rate schedule and global gradient-norm clipping.
//!
//! Backward functions accumulate (`+=`) into parameter gradients; callers
//! zero them explicitly between steps.

mod activation;
mod conv;
mod embedding;
#[cfg(test)]
pub(crate) mod gradcheck;
mod linear;
mod optim;
mod tensor;

pub use activation::{dropout, dropout_backward, relu, relu_backward, DropoutMask};
pub use conv::{conv1d_backward, conv1d_forward, KERNEL_WIDTH};
pub use embedding::{embedding_backward, embedding_lookup, positional_table, sinusoidal_pe};
pub use linear::{linear_backward, linear_forward};
pub use optim::{clip_grad_norm, global_grad_norm, AdamW, AdamWConfig, LrSchedule};
pub use tensor::{Param, Tensor3};
