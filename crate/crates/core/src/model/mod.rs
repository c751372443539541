//! The conditional denoiser `ε_θ(x_t, t, y, M)`.
//!
//! Per timestep the noisy input is concatenated with a learnable
//! diffusion-step embedding, a class embedding and the observation mask,
//! projected to the working width, passed through the temporal adapter
//! (sinusoidal position encoding, two width-3 convolutions with ReLU and
//! dropout, linear projection) and finally through a two-layer MLP head.

mod config;
mod denoiser;
mod label;
mod params;
mod train;

pub use config::DenoiserConfig;
pub use denoiser::{
    adapter_forward, build_input, denoiser_backward, denoiser_forward, AdapterCache, Denoiser,
    ForwardCache,
};
pub use label::ActivityLabel;
pub use params::{AdapterParams, DenoiserParams};
pub use train::{
    early_stopping, fit, train_epoch, validation_loss, EarlyStop, EpochRecord, EpochStats,
    FitReport, TrainConfig, TrainState,
};
