use alloc::format;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{denoiser_backward, denoiser_forward, DenoiserConfig, DenoiserParams};
use crate::data::{batch_tensors, SequenceWindow};
use crate::diffusion::{q_sample, simple_loss_and_grad, NoiseSchedule};
use crate::nn::{clip_grad_norm, AdamW, AdamWConfig, LrSchedule};
use crate::{rng_stream, Error, Result, Rng};

/// Optimization settings; defaults are batch 64, lr 1e-3, weight decay
/// 1e-5, clip 1.0, 50 epochs, patience 10.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub warmup_steps: u64,
    /// Restrict the loss mean to observed (`M = 1`) elements.
    pub mask_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            lr: 1e-3,
            weight_decay: 1e-5,
            clip_norm: 1.0,
            epochs: 50,
            patience: 10,
            min_delta: 1e-4,
            warmup_steps: 0,
            mask_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn batches_per_epoch(&self, n: usize) -> usize {
        n.div_ceil(self.batch_size.max(1))
    }
}

/// Optimizer, learning-rate schedule and the training RNG.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub optimizer: AdamW,
    pub lr_schedule: LrSchedule,
    pub rng: Rng,
}

impl TrainState {
    pub fn new(
        params: &DenoiserParams,
        config: &TrainConfig,
        total_steps: u64,
        seed: u64,
    ) -> Result<Self> {
        let opt = AdamWConfig {
            weight_decay: config.weight_decay,
            ..AdamWConfig::default()
        };
        Ok(TrainState {
            optimizer: AdamW::new(opt, &params.params()),
            lr_schedule: LrSchedule::new(config.lr, total_steps.max(1), config.warmup_steps)?,
            rng: rng_stream(seed, 1),
        })
    }

    pub fn step(&self) -> u64 {
        self.optimizer.step_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub batches: usize,
    pub mean_grad_norm: f64,
    pub last_lr: f64,
}

fn check_schedule(config: &DenoiserConfig, schedule: &NoiseSchedule) -> Result<()> {
    if schedule.steps() != config.diffusion_steps {
        return Err(Error::Parameter(format!(
            "schedule has {} steps but the step embedding has {} rows",
            schedule.steps(),
            config.diffusion_steps
        )));
    }
    Ok(())
}

/// One pass over `data` in shuffled mini-batches: sample `t`, noise, predict,
/// back-propagate the noise MSE, clip, and take an AdamW step at the
/// scheduled learning rate.
pub fn train_epoch(
    data: &[SequenceWindow],
    params: &mut DenoiserParams,
    config: &DenoiserConfig,
    state: &mut TrainState,
    schedule: &NoiseSchedule,
    train: &TrainConfig,
) -> Result<EpochStats> {
    if data.is_empty() {
        return Err(Error::Parameter("cannot train on an empty dataset".into()));
    }
    if train.batch_size == 0 {
        return Err(Error::Parameter("batch_size must be positive".into()));
    }
    check_schedule(config, schedule)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut state.rng);
    let (mut loss_sum, mut norm_sum, mut batches, mut lr) = (0.0, 0.0, 0, 0.0);
    for idx in order.chunks(train.batch_size) {
        let (x0, mask, y) = batch_tensors(data, idx)?;
        let t: Vec<usize> = (0..idx.len())
            .map(|_| state.rng.random_range(1..=schedule.steps()))
            .collect();
        let (xt, eps) = q_sample(&x0, &t, schedule, &mut state.rng)?;
        let (pred, cache) =
            denoiser_forward(&xt, &t, &y, &mask, params, config, Some(&mut state.rng))?;
        let (loss, grad) = simple_loss_and_grad(&eps, &pred, train.mask_loss.then_some(&mask))?;
        if !loss.is_finite() {
            return Err(Error::NonFinite("simple_loss"));
        }
        params.zero_grad();
        denoiser_backward(params, config, &cache, &grad)?;
        norm_sum += clip_grad_norm(&mut params.params_mut(), train.clip_norm);
        lr = state.lr_schedule.lr(state.optimizer.step_count());
        state.optimizer.step(&mut params.params_mut(), lr)?;
        if !params.all_finite() {
            return Err(Error::NonFinite("adamw_step"));
        }
        loss_sum += loss * idx.len() as f64;
        batches += 1;
    }
    Ok(EpochStats {
        mean_loss: loss_sum / data.len() as f64,
        batches,
        mean_grad_norm: norm_sum / batches as f64,
        last_lr: lr,
    })
}

const VALIDATION_STREAM: u64 = 0x7661_6c69_6400;

/// Inference-mode loss with step and noise draws fixed by `seed`, so values
/// are comparable across epochs.
pub fn validation_loss(
    data: &[SequenceWindow],
    params: &DenoiserParams,
    config: &DenoiserConfig,
    schedule: &NoiseSchedule,
    seed: u64,
    mask_loss: bool,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Parameter("empty validation set".into()));
    }
    check_schedule(config, schedule)?;
    let mut rng = rng_stream(seed, VALIDATION_STREAM);
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut sum = 0.0;
    for chunk in idx.chunks(256) {
        let (x0, mask, y) = batch_tensors(data, chunk)?;
        let t: Vec<usize> = (0..chunk.len())
            .map(|_| rng.random_range(1..=schedule.steps()))
            .collect();
        let (xt, eps) = q_sample(&x0, &t, schedule, &mut rng)?;
        let (pred, _) = denoiser_forward::<Rng>(&xt, &t, &y, &mask, params, config, None)?;
        let (loss, _) = simple_loss_and_grad(&eps, &pred, mask_loss.then_some(&mask))?;
        sum += loss * chunk.len() as f64;
    }
    Ok(sum / data.len() as f64)
}

/// Outcome of the early-stopping rule on a loss series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStop {
    /// Index at which patience ran out, if it did.
    pub stop_at: Option<usize>,
    /// Argmin of the series up to the stopping point (first occurrence).
    pub best: usize,
}

impl EarlyStop {
    pub fn should_stop(&self) -> bool {
        self.stop_at.is_some()
    }
}

/// Stops once `patience` consecutive epochs fail to improve on the best
/// loss by more than `min_delta`.
pub fn early_stopping(losses: &[f64], patience: usize, min_delta: f64) -> Result<EarlyStop> {
    let (&first, rest) = losses
        .split_first()
        .ok_or_else(|| Error::InsufficientData("early stopping needs at least one loss".into()))?;
    let mut best = first;
    let mut wait = 0;
    let mut stop_at = None;
    for (i, &l) in rest.iter().enumerate() {
        if l < best - min_delta {
            best = l;
            wait = 0;
        } else {
            wait += 1;
            if wait >= patience {
                stop_at = Some(i + 1);
                break;
            }
        }
    }
    let end = stop_at.map_or(losses.len(), |s| s + 1);
    let mut argmin = 0;
    for (i, &l) in losses[..end].iter().enumerate() {
        if l < losses[argmin] {
            argmin = i;
        }
    }
    Ok(EarlyStop {
        stop_at,
        best: argmin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when no validation set was given.
    pub val_loss: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
    pub best_epoch: Option<usize>,
}

/// Trains from epoch `first_epoch` up to `train.epochs`, evaluating the
/// validation loss after each epoch and stopping early when it stalls.
#[allow(clippy::too_many_arguments)]
pub fn fit(
    train_set: &[SequenceWindow],
    val_set: &[SequenceWindow],
    params: &mut DenoiserParams,
    config: &DenoiserConfig,
    schedule: &NoiseSchedule,
    train: &TrainConfig,
    state: &mut TrainState,
    val_seed: u64,
    first_epoch: usize,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FitReport> {
    let mut history = Vec::new();
    let mut val_losses = Vec::new();
    let mut stopped_early = false;
    for epoch in first_epoch..train.epochs {
        let stats = train_epoch(train_set, params, config, state, schedule, train)?;
        let val_loss = if val_set.is_empty() {
            f64::NAN
        } else {
            validation_loss(val_set, params, config, schedule, val_seed, train.mask_loss)?
        };
        let rec = EpochRecord {
            epoch,
            train_loss: stats.mean_loss,
            val_loss,
            step: state.step(),
        };
        on_epoch(&rec);
        history.push(rec);
        if !val_set.is_empty() {
            val_losses.push(val_loss);
            if early_stopping(&val_losses, train.patience, train.min_delta)?.should_stop() {
                stopped_early = true;
                break;
            }
        }
    }
    let best_epoch = if val_losses.is_empty() {
        None
    } else {
        Some(history[early_stopping(&val_losses, train.patience, train.min_delta)?.best].epoch)
    };
    Ok(FitReport {
        history,
        stopped_early,
        best_epoch,
    })
}
