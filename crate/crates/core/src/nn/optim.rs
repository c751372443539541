use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::Param;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            weight_decay: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// AdamW with decoupled weight decay and bias-corrected moments.
///
/// Per parameter element, with `s` the step after incrementing:
///
/// ```text
/// w ← w − lr·λ·w
/// m ← β₁m + (1−β₁)g        v ← β₂v + (1−β₂)g²
/// w ← w − lr · (m/(1−β₁ˢ)) / (√(v/(1−β₂ˢ)) + ε)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub config: AdamWConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamW {
    pub fn new(config: AdamWConfig, params: &[&Param]) -> Self {
        AdamW {
            config,
            m: params.iter().map(|p| alloc::vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| alloc::vec![0.0; p.len()]).collect(),
            step: 0,
        }
    }

    /// Restores a saved state; moment lengths are validated on the next step.
    pub fn from_parts(
        config: AdamWConfig,
        m: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        step: u64,
    ) -> Result<Self> {
        if m.len() != v.len() || m.iter().zip(&v).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::dim(
                "AdamW::from_parts",
                "matching moment shapes",
                "mismatch",
            ));
        }
        if v.iter().flatten().any(|&x| x < 0.0) {
            return Err(Error::Parameter(
                "second moments must be nonnegative".into(),
            ));
        }
        Ok(AdamW { config, m, v, step })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Applies one update to `params` (same order as at construction).
    pub fn step(&mut self, params: &mut [&mut Param], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::dim(
                "adamw_step",
                format!("{} parameters", self.m.len()),
                format!("{}", params.len()),
            ));
        }
        if let Some((i, p)) = params
            .iter()
            .enumerate()
            .find(|(i, p)| p.len() != self.m[*i].len())
        {
            return Err(Error::dim(
                "adamw_step",
                format!("{} values for parameter {i}", self.m[i].len()),
                format!("{} ({})", p.len(), p.name()),
            ));
        }
        self.step += 1;
        let AdamWConfig {
            weight_decay,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let s = self.step as f64;
        let bc1 = 1.0 - libm::pow(beta1, s);
        let bc2 = 1.0 - libm::pow(beta2, s);
        let decay = 1.0 - lr * weight_decay;
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            for (((w, &g), mi), vi) in p
                .value
                .iter_mut()
                .zip(&p.grad)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *w *= decay;
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (libm::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}

/// Cosine decay from `base_lr` to zero over `total_steps`, after an
/// optional linear warmup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub total_steps: u64,
    pub warmup_steps: u64,
}

impl LrSchedule {
    pub fn new(base_lr: f64, total_steps: u64, warmup_steps: u64) -> Result<Self> {
        if !(base_lr >= 0.0)
            || !base_lr.is_finite()
            || total_steps == 0
            || warmup_steps >= total_steps
        {
            return Err(Error::Parameter(format!(
                "invalid lr schedule: base_lr={base_lr}, total_steps={total_steps}, warmup_steps={warmup_steps}"
            )));
        }
        Ok(LrSchedule {
            base_lr,
            total_steps,
            warmup_steps,
        })
    }

    pub fn lr(&self, step: u64) -> f64 {
        if step < self.warmup_steps {
            return self.base_lr * (step + 1) as f64 / self.warmup_steps as f64;
        }
        let span = (self.total_steps - self.warmup_steps) as f64;
        let progress = ((step - self.warmup_steps) as f64 / span).min(1.0);
        self.base_lr * 0.5 * (1.0 + libm::cos(PI * progress))
    }
}

pub fn global_grad_norm(params: &[&mut Param]) -> f64 {
    libm::sqrt(
        params
            .iter()
            .flat_map(|p| p.grad.iter())
            .map(|g| g * g)
            .sum(),
    )
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(params: &mut [&mut Param], max_norm: f64) -> f64 {
    let norm = global_grad_norm(params);
    if norm > max_norm {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}
