use alloc::format;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::DenoiserConfig;
use crate::nn::{Param, KERNEL_WIDTH};
use crate::{Error, Result};

const EMBEDDING_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub conv1_kernel: Param,
    pub conv1_bias: Param,
    pub conv2_kernel: Param,
    pub conv2_bias: Param,
    pub proj_weight: Param,
    pub proj_bias: Param,
}

/// All learnable tensors of the denoiser.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    pub t_emb: Param,
    pub c_emb: Param,
    pub input_weight: Param,
    pub input_bias: Param,
    pub adapters: Vec<AdapterParams>,
    pub mlp1_weight: Param,
    pub mlp1_bias: Param,
    pub mlp2_weight: Param,
    pub mlp2_bias: Param,
}

fn glorot<R: Rng + ?Sized>(p: &mut Param, fan_in: usize, fan_out: usize, rng: &mut R) {
    let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in &mut p.value {
        *v = rng.random_range(-bound..bound);
    }
}

impl AdapterParams {
    fn zeros(block: usize, h: usize) -> Self {
        let n = |s: &str| format!("adapter{block}.{s}");
        AdapterParams {
            conv1_kernel: Param::zeros(n("conv1.kernel"), &[h, h, KERNEL_WIDTH]),
            conv1_bias: Param::zeros(n("conv1.bias"), &[h]),
            conv2_kernel: Param::zeros(n("conv2.kernel"), &[h, h, KERNEL_WIDTH]),
            conv2_bias: Param::zeros(n("conv2.bias"), &[h]),
            proj_weight: Param::zeros(n("proj.weight"), &[h, h]),
            proj_bias: Param::zeros(n("proj.bias"), &[h]),
        }
    }

    pub(crate) fn iter(&self) -> [&Param; 6] {
        [
            &self.conv1_kernel,
            &self.conv1_bias,
            &self.conv2_kernel,
            &self.conv2_bias,
            &self.proj_weight,
            &self.proj_bias,
        ]
    }

    pub(crate) fn iter_mut(&mut self) -> [&mut Param; 6] {
        [
            &mut self.conv1_kernel,
            &mut self.conv1_bias,
            &mut self.conv2_kernel,
            &mut self.conv2_bias,
            &mut self.proj_weight,
            &mut self.proj_bias,
        ]
    }
}

impl DenoiserParams {
    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &DenoiserConfig) -> Result<Self> {
        config.validate()?;
        let h = config.d_hidden;
        Ok(DenoiserParams {
            t_emb: Param::zeros("t_emb", &[config.diffusion_steps, config.d_t]),
            c_emb: Param::zeros("c_emb", &[config.n_classes, config.d_c]),
            input_weight: Param::zeros("input.weight", &[h, config.input_width()]),
            input_bias: Param::zeros("input.bias", &[h]),
            adapters: (0..config.active_adapter_blocks())
                .map(|b| AdapterParams::zeros(b, h))
                .collect(),
            mlp1_weight: Param::zeros("mlp1.weight", &[h, h]),
            mlp1_bias: Param::zeros("mlp1.bias", &[h]),
            mlp2_weight: Param::zeros("mlp2.weight", &[config.channels, h]),
            mlp2_bias: Param::zeros("mlp2.bias", &[config.channels]),
        })
    }

    /// Weights uniform in `±√(6/(fan_in+fan_out))`, biases zero, embedding
    /// tables `N(0, 0.02²)`. Convolution fans include the kernel width.
    pub fn init<R: Rng + ?Sized>(config: &DenoiserConfig, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let normal = Normal::new(0.0, EMBEDDING_STD).expect("valid std");
        for v in p.t_emb.value.iter_mut().chain(p.c_emb.value.iter_mut()) {
            *v = normal.sample(rng);
        }
        let h = config.d_hidden;
        glorot(&mut p.input_weight, config.input_width(), h, rng);
        for a in &mut p.adapters {
            glorot(&mut a.conv1_kernel, h * KERNEL_WIDTH, h * KERNEL_WIDTH, rng);
            glorot(&mut a.conv2_kernel, h * KERNEL_WIDTH, h * KERNEL_WIDTH, rng);
            glorot(&mut a.proj_weight, h, h, rng);
        }
        glorot(&mut p.mlp1_weight, h, h, rng);
        glorot(&mut p.mlp2_weight, h, config.channels, rng);
        Ok(p)
    }

    /// Parameters in a fixed canonical order (the checkpoint order).
    pub fn params(&self) -> Vec<&Param> {
        let mut v = alloc::vec![
            &self.t_emb,
            &self.c_emb,
            &self.input_weight,
            &self.input_bias
        ];
        for a in &self.adapters {
            v.extend(a.iter());
        }
        v.extend([
            &self.mlp1_weight,
            &self.mlp1_bias,
            &self.mlp2_weight,
            &self.mlp2_bias,
        ]);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = alloc::vec![
            &mut self.t_emb,
            &mut self.c_emb,
            &mut self.input_weight,
            &mut self.input_bias
        ];
        for a in &mut self.adapters {
            v.extend(a.iter_mut());
        }
        v.extend([
            &mut self.mlp1_weight,
            &mut self.mlp1_bias,
            &mut self.mlp2_weight,
            &mut self.mlp2_bias,
        ]);
        v
    }

    pub fn count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params()
            .iter()
            .all(|p| p.value.iter().all(|v| v.is_finite()))
    }

    /// Copies values from `(name, shape, values)` triples in canonical order.
    pub fn load_values(
        &mut self,
        entries: &[(alloc::string::String, Vec<usize>, Vec<f64>)],
    ) -> Result<()> {
        let mut params = self.params_mut();
        if entries.len() != params.len() {
            return Err(Error::Format(format!(
                "expected {} parameter tensors, found {}",
                params.len(),
                entries.len()
            )));
        }
        for (p, (name, shape, values)) in params.iter_mut().zip(entries) {
            if p.name() != name || p.shape() != shape.as_slice() || values.len() != p.len() {
                return Err(Error::Format(format!(
                    "parameter mismatch: expected {} {:?}, found {name} {shape:?}",
                    p.name(),
                    p.shape()
                )));
            }
            p.value.copy_from_slice(values);
        }
        Ok(())
    }
}
