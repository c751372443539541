use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Precomputed per-step tables for `T` diffusion steps.
///
/// Steps are 1-based (`1..=T`); `alpha_bar(0)` is the virtual value 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    offset: f64,
    beta_clip: f64,
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
    sigmas: Vec<f64>,
}

impl NoiseSchedule {
    pub const DEFAULT_OFFSET: f64 = 0.008;
    pub const DEFAULT_BETA_CLIP: f64 = 0.999;

    /// Cosine schedule with the default offset `s = 0.008` and clip 0.999.
    pub fn cosine(steps: usize) -> Result<Self> {
        Self::cosine_with(steps, Self::DEFAULT_OFFSET, Self::DEFAULT_BETA_CLIP)
    }

    /// `f(t) = cos²(((t/T + s)/(1 + s))·π/2)`, `ᾱ(t) = f(t)/f(0)`,
    /// `β_t = min(1 − ᾱ(t)/ᾱ(t−1), clip)`. The stored `alpha_bar` is the
    /// running product of the clipped `1 − β`.
    pub fn cosine_with(steps: usize, offset: f64, beta_clip: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Parameter(format!(
                "diffusion needs at least 2 steps, got {steps}"
            )));
        }
        if !(offset > 0.0) || !(beta_clip > 0.0 && beta_clip < 1.0) {
            return Err(Error::Parameter(format!(
                "invalid cosine schedule offset {offset} / beta clip {beta_clip}"
            )));
        }
        let f = |t: usize| {
            let c = libm::cos((t as f64 / steps as f64 + offset) / (1.0 + offset) * FRAC_PI_2);
            c * c
        };
        let f0 = f(0);
        let mut betas = Vec::with_capacity(steps);
        for t in 1..=steps {
            let ratio = (f(t) / f0) / (f(t - 1) / f0);
            betas.push((1.0 - ratio).min(beta_clip));
        }
        Self::from_betas_inner(betas, offset, beta_clip)
    }

    fn from_betas_inner(betas: Vec<f64>, offset: f64, beta_clip: f64) -> Result<Self> {
        if let Some((i, b)) = betas
            .iter()
            .enumerate()
            .find(|(_, b)| !(**b > 0.0 && **b < 1.0))
        {
            return Err(Error::Parameter(format!(
                "beta at step {} is {b}, outside (0, 1)",
                i + 1
            )));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut acc = 1.0;
        for a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        let mut sigmas = Vec::with_capacity(betas.len());
        for t in 0..betas.len() {
            let prev = if t == 0 { 1.0 } else { alpha_bars[t - 1] };
            let var = (1.0 - prev) / (1.0 - alpha_bars[t]) * betas[t];
            sigmas.push(libm::sqrt(var.max(0.0)));
        }
        Ok(NoiseSchedule {
            offset,
            beta_clip,
            betas,
            alphas,
            alpha_bars,
            sigmas,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn beta_clip(&self) -> f64 {
        self.beta_clip
    }

    pub fn check_step(&self, op: &'static str, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            Err(Error::index(op, t, format!("1..={}", self.steps())))
        } else {
            Ok(())
        }
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// `ᾱ(t)`, with `ᾱ(0) = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bars[t - 1]
        }
    }

    /// Posterior standard deviation `σ_t = √(β̃_t)`; `σ_1 = 0`.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigmas[t - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}
