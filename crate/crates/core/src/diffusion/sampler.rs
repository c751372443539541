use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{p_sample_step, NoiseSchedule};
use crate::nn::Tensor3;
use crate::{rng_stream, Error, Result};

/// Anything that predicts the noise component of `x_t` given the step,
/// class label and observation mask.
pub trait NoisePredictor {
    fn seq_len(&self) -> usize;
    fn channels(&self) -> usize;

    /// Whether the predictor has been fitted; untrained predictors are only
    /// sampled from when [`SampleOptions::allow_untrained`] is set.
    fn is_trained(&self) -> bool {
        true
    }

    /// Inference-mode prediction (no dropout).
    fn predict_noise(
        &self,
        xt: &Tensor3,
        t: &[usize],
        y: &[usize],
        mask: &Tensor3,
    ) -> Result<Tensor3>;
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub allow_untrained: bool,
    /// Sequences denoised together per predictor call.
    pub chunk_size: usize,
    /// Finiteness is asserted every this many reverse steps and at the end.
    pub check_every: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            allow_untrained: false,
            chunk_size: 64,
            check_every: 100,
        }
    }
}

/// Ancestral sampling from `x_T ~ N(0, I)` down to `x_0` for `n` sequences
/// of class `y`, all conditioned on the `(seq_len × channels)` mask.
///
/// A base seed is drawn from `rng` once; sequence `i` then uses its own
/// stream `i` of that seed for its initial noise and every step's `z`, so
/// the output does not depend on `chunk_size`.
pub fn sample_loop<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    model: &P,
    schedule: &NoiseSchedule,
    n: usize,
    y: usize,
    mask: &[f64],
    rng: &mut R,
    options: SampleOptions,
) -> Result<Tensor3> {
    if !model.is_trained() && !options.allow_untrained {
        return Err(Error::Parameter(
            "refusing to sample from an untrained model".into(),
        ));
    }
    let (len, ch) = (model.seq_len(), model.channels());
    if mask.len() != len * ch {
        return Err(Error::dim(
            "sample_loop",
            format!("mask of {} values", len * ch),
            format!("{}", mask.len()),
        ));
    }
    let base_seed: u64 = rng.random();
    let mut out = Tensor3::zeros(n, len, ch);
    let chunk = options.chunk_size.max(1);
    let every = options.check_every.max(1);
    for start in (0..n).step_by(chunk) {
        let count = chunk.min(n - start);
        let mut streams: Vec<_> = (start..start + count)
            .map(|i| rng_stream(base_seed, i as u64))
            .collect();
        let mut xt = Tensor3::zeros(count, len, ch);
        for (b, s) in streams.iter_mut().enumerate() {
            for v in xt.item_mut(b) {
                *v = StandardNormal.sample(s);
            }
        }
        let mask_t = Tensor3::from_vec(count, len, ch, mask.repeat(count))?;
        let labels = vec![y; count];
        let mut z = Tensor3::zeros(count, len, ch);
        for t in (1..=schedule.steps()).rev() {
            let eps = model.predict_noise(&xt, &vec![t; count], &labels, &mask_t)?;
            if t > 1 {
                for (b, s) in streams.iter_mut().enumerate() {
                    for v in z.item_mut(b) {
                        *v = StandardNormal.sample(s);
                    }
                }
            }
            xt = p_sample_step(&xt, t, &eps, schedule, rng, Some(&z))?;
            if t % every == 0 {
                xt.check_finite("sample_loop")?;
            }
        }
        xt.check_finite("sample_loop")?;
        for b in 0..count {
            out.item_mut(start + b).copy_from_slice(xt.item(b));
        }
    }
    Ok(out)
}
