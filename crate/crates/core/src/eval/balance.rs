use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::smote_oversample;
use crate::data::SequenceWindow;
use crate::diffusion::{sample_loop, NoisePredictor, NoiseSchedule, SampleOptions};
use crate::{Error, Result, Rng};

/// A source of class-conditional synthetic windows.
pub trait WindowGenerator {
    fn generate(&mut self, class: usize, n: usize) -> Result<Vec<SequenceWindow>>;
}

/// Windows to add per class so every class reaches the largest count.
pub fn balance_plan(counts: &[usize]) -> Vec<usize> {
    let target = counts.iter().copied().max().unwrap_or(0);
    counts.iter().map(|&c| target - c).collect()
}

/// Appends synthetic windows for every class below the majority count.
pub fn balance_with_synthetic<G: WindowGenerator + ?Sized>(
    train: &[SequenceWindow],
    n_classes: usize,
    generator: &mut G,
) -> Result<Vec<SequenceWindow>> {
    let mut counts = vec![0usize; n_classes];
    for w in train {
        *counts
            .get_mut(w.label)
            .ok_or_else(|| Error::index("balance", w.label, format!("0..{n_classes}")))? += 1;
    }
    let mut out = train.to_vec();
    for (class, add) in balance_plan(&counts).into_iter().enumerate() {
        if add == 0 {
            continue;
        }
        let synth = generator.generate(class, add)?;
        if synth.len() != add || synth.iter().any(|w| w.label != class) {
            return Err(Error::Parameter(format!(
                "generator returned {} windows for a request of {add} of class {class}",
                synth.len()
            )));
        }
        out.extend(synth);
    }
    Ok(out)
}

/// SMOTE over the real windows of each requested class.
pub struct SmoteGenerator<'a> {
    pub windows: &'a [SequenceWindow],
    pub k: usize,
    pub rng: Rng,
}

impl WindowGenerator for SmoteGenerator<'_> {
    fn generate(&mut self, class: usize, n: usize) -> Result<Vec<SequenceWindow>> {
        let members: Vec<SequenceWindow> = self
            .windows
            .iter()
            .filter(|w| w.label == class)
            .cloned()
            .collect();
        Ok(smote_oversample(&members, self.k, n, &mut self.rng)?
            .into_iter()
            .map(|s| s.window)
            .collect())
    }
}

/// Reverse-diffusion sampling from a trained noise predictor, fully
/// observed mask, output in normalized units.
pub struct DiffusionGenerator<'a, M: NoisePredictor + ?Sized> {
    pub model: &'a M,
    pub schedule: &'a NoiseSchedule,
    pub rng: Rng,
    pub options: SampleOptions,
}

impl<M: NoisePredictor + ?Sized> WindowGenerator for DiffusionGenerator<'_, M> {
    fn generate(&mut self, class: usize, n: usize) -> Result<Vec<SequenceWindow>> {
        let (len, ch) = (self.model.seq_len(), self.model.channels());
        let mask = vec![1.0; len * ch];
        let x = sample_loop(
            self.model,
            self.schedule,
            n,
            class,
            &mask,
            &mut self.rng,
            self.options,
        )?;
        Ok(super::windows_from_tensor(&x, &vec![class; n]))
    }
}
