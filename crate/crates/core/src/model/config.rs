use alloc::format;

use crate::{Error, Result};

/// Shape and regularization settings of the denoiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiserConfig {
    /// Sensor channels `D`.
    pub channels: usize,
    /// Window length used when sampling.
    pub seq_len: usize,
    /// Rows of the diffusion-step embedding table (`T` of the schedule).
    pub diffusion_steps: usize,
    pub d_t: usize,
    pub d_c: usize,
    pub n_classes: usize,
    pub d_hidden: usize,
    pub dropout_rate: f64,
    /// `false` gives the non-temporal ablation: no adapter parameters and
    /// a pure per-timestep MLP.
    pub adapters_enabled: bool,
    pub adapter_blocks: usize,
    /// Dropout after both convolutions (`true`) or only after the second.
    pub dropout_after_each_conv: bool,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig {
            channels: 3,
            seq_len: 100,
            diffusion_steps: 1000,
            d_t: 32,
            d_c: 16,
            n_classes: 6,
            d_hidden: 128,
            dropout_rate: 0.1,
            adapters_enabled: true,
            adapter_blocks: 1,
            dropout_after_each_conv: true,
        }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("channels", self.channels),
            ("seq_len", self.seq_len),
            ("diffusion_steps", self.diffusion_steps),
            ("d_t", self.d_t),
            ("d_c", self.d_c),
            ("n_classes", self.n_classes),
            ("d_hidden", self.d_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be positive")));
        }
        if self.d_t % 2 != 0 {
            return Err(Error::Parameter(format!(
                "d_t must be even, got {}",
                self.d_t
            )));
        }
        if self.adapters_enabled && (self.d_hidden % 2 != 0 || self.adapter_blocks == 0) {
            return Err(Error::Parameter(format!(
                "adapters need an even d_hidden and at least one block (d_hidden={}, blocks={})",
                self.d_hidden, self.adapter_blocks
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Parameter(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Width of the fused per-timestep input `[x_t ‖ t_emb ‖ c_emb ‖ M]`.
    pub fn input_width(&self) -> usize {
        2 * self.channels + self.d_t + self.d_c
    }

    pub fn active_adapter_blocks(&self) -> usize {
        if self.adapters_enabled {
            self.adapter_blocks
        } else {
            0
        }
    }

    /// Closed-form count of learnable scalars.
    pub fn param_count(&self) -> usize {
        let h = self.d_hidden;
        let embeddings = self.diffusion_steps * self.d_t + self.n_classes * self.d_c;
        let input = h * self.input_width() + h;
        let adapter = 2 * (3 * h * h + h) + (h * h + h);
        let head = (h * h + h) + (self.channels * h + self.channels);
        embeddings + input + self.active_adapter_blocks() * adapter + head
    }
}
