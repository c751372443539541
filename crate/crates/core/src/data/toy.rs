use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::SequenceWindow;
use crate::{Error, Result, Rng};

/// Synthetic multi-class sequences. Class `k` below the last is a sinusoid
/// at `2^k` cycles per window with a random phase per channel plus
/// Gaussian noise; the last class is a slow, low-variance AR(1) process.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    /// Windows to generate for each class; its length is the class count.
    pub class_counts: Vec<usize>,
    pub seq_len: usize,
    pub channels: usize,
    pub noise_std: f64,
    pub static_std: f64,
    pub static_phi: f64,
}

impl ToyConfig {
    pub fn balanced(n_per_class: usize, n_classes: usize, seq_len: usize, channels: usize) -> Self {
        ToyConfig {
            class_counts: vec![n_per_class; n_classes],
            seq_len,
            channels,
            noise_std: 0.1,
            static_std: 0.2,
            static_phi: 0.9,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.class_counts.len()
    }

    /// Cycles per window for a dynamic class, `None` for the static one.
    pub fn frequency(&self, class: usize) -> Option<f64> {
        (class + 1 < self.n_classes()).then(|| (1u64 << class) as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.n_classes() < 2 || self.seq_len == 0 || self.channels == 0 {
            return Err(Error::Parameter(format!(
                "toy data needs >= 2 classes and positive shape, got {} classes, {}×{}",
                self.n_classes(),
                self.seq_len,
                self.channels
            )));
        }
        if let Some(f) = self.frequency(self.n_classes() - 2) {
            if 2.0 * f >= self.seq_len as f64 {
                return Err(Error::Parameter(format!(
                    "highest frequency {f} is not resolvable in {} steps",
                    self.seq_len
                )));
            }
        }
        if !(self.noise_std >= 0.0 && self.static_std > 0.0 && self.static_phi.abs() < 1.0) {
            return Err(Error::Parameter("invalid toy noise settings".into()));
        }
        Ok(())
    }
}

/// Generates the windows class by class, fully observed, normalized scale.
pub fn toy_dataset(config: &ToyConfig, rng: &mut Rng) -> Result<Vec<SequenceWindow>> {
    config.validate()?;
    let (len, ch) = (config.seq_len, config.channels);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::Parameter(format!("{e}")))?;
    let innov_std = config.static_std * libm::sqrt(1.0 - config.static_phi * config.static_phi);
    let innov = Normal::new(0.0, innov_std).map_err(|e| Error::Parameter(format!("{e}")))?;
    let stationary =
        Normal::new(0.0, config.static_std).map_err(|e| Error::Parameter(format!("{e}")))?;
    let mut out = Vec::with_capacity(config.class_counts.iter().sum());
    for (class, &count) in config.class_counts.iter().enumerate() {
        for _ in 0..count {
            let mut x0 = vec![0.0; len * ch];
            match config.frequency(class) {
                Some(f) => {
                    for c in 0..ch {
                        let phase = rng.random_range(0.0..2.0 * PI);
                        for t in 0..len {
                            let arg = 2.0 * PI * f * t as f64 / len as f64 + phase;
                            x0[t * ch + c] = libm::sin(arg) + noise.sample(rng);
                        }
                    }
                }
                None => {
                    for c in 0..ch {
                        let mut v = stationary.sample(rng);
                        for t in 0..len {
                            x0[t * ch + c] = v;
                            v = config.static_phi * v + innov.sample(rng);
                        }
                    }
                }
            }
            out.push(SequenceWindow {
                len,
                channels: ch,
                x0,
                mask: vec![1.0; len * ch],
                label: class,
                user: 0,
            });
        }
    }
    Ok(out)
}
