use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    acf, acf_distance, bigram_distance, bigram_matrix, extract_features, rf_predict, rf_train,
    wasserstein1, BinEdges, ConfusionMatrix, ForestConfig,
};
use crate::data::SequenceWindow;
use crate::nn::Tensor3;
use crate::{rng_stream, Error, Result};

/// Per-sequence values of one channel, optionally restricted to a class.
pub fn channel_series(
    windows: &[SequenceWindow],
    class: Option<usize>,
    channel: usize,
) -> Vec<Vec<f64>> {
    windows
        .iter()
        .filter(|w| class.is_none_or(|c| w.label == c))
        .map(|w| w.channel(channel))
        .collect()
}

/// Splits a `(n, len, channels)` tensor into fully observed windows.
pub fn windows_from_tensor(x: &Tensor3, labels: &[usize]) -> Vec<SequenceWindow> {
    let [_, len, ch] = x.dims();
    labels
        .iter()
        .enumerate()
        .map(|(b, &label)| SequenceWindow {
            len,
            channels: ch,
            x0: x.item(b).to_vec(),
            mask: vec![1.0; len * ch],
            label,
            user: 0,
        })
        .collect()
}

/// Randomly permutes the time steps of each window, keeping channels of a
/// step together. Marginals are preserved; temporal order is not.
pub fn time_shuffle(windows: &[SequenceWindow], seed: u64) -> Vec<SequenceWindow> {
    windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut order: Vec<usize> = (0..w.len).collect();
            order.shuffle(&mut rng_stream(seed, i as u64));
            let gather = |v: &[f64]| {
                order
                    .iter()
                    .flat_map(|&t| v[t * w.channels..(t + 1) * w.channels].to_vec())
                    .collect()
            };
            SequenceWindow {
                x0: gather(&w.x0),
                mask: gather(&w.mask),
                ..w.clone()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalOptions {
    pub n_bins: usize,
    pub max_lag: usize,
    pub shuffle_seed: u64,
}

impl Default for TemporalOptions {
    fn default() -> Self {
        TemporalOptions {
            n_bins: 20,
            max_lag: 50,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub bigram_distance: f64,
    pub acf_distance: f64,
    pub wasserstein1: f64,
}

/// Metrics for one class; `per_channel` is empty when either side has no
/// windows of the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: usize,
    pub n_real: usize,
    pub n_synth: usize,
    pub per_channel: Vec<ChannelMetrics>,
}

/// The same metrics between real data and its time-shuffled copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleBaseline {
    pub seed: u64,
    pub per_class: Vec<ClassMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalReport {
    pub per_class: Vec<ClassMetrics>,
    pub per_channel_wasserstein1: Vec<f64>,
    pub shuffle_baseline: ShuffleBaseline,
}

fn compare(
    real: &[SequenceWindow],
    synth: &[SequenceWindow],
    class: usize,
    edges: &[BinEdges],
    opts: &TemporalOptions,
) -> Result<ClassMetrics> {
    let n_real = real.iter().filter(|w| w.label == class).count();
    let n_synth = synth.iter().filter(|w| w.label == class).count();
    let mut per_channel = Vec::new();
    if n_real > 0 && n_synth > 0 {
        for (c, e) in edges.iter().enumerate() {
            let (r, s) = (
                channel_series(real, Some(class), c),
                channel_series(synth, Some(class), c),
            );
            let bigram = bigram_distance(&bigram_matrix(&r, e), &bigram_matrix(&s, e))?;
            let acf_d = acf_distance(
                &acf(&r, opts.max_lag)?,
                &acf(&s, opts.max_lag)?,
                opts.max_lag,
            )?;
            let w1 = wasserstein1(&r.concat(), &s.concat())?;
            per_channel.push(ChannelMetrics {
                bigram_distance: bigram,
                acf_distance: acf_d,
                wasserstein1: w1,
            });
        }
    }
    Ok(ClassMetrics {
        label: class,
        n_real,
        n_synth,
        per_channel,
    })
}

/// Bigram, ACF and W1 comparisons per class and channel, with bins spanning
/// the pooled real range of each channel, plus the shuffled-real baseline.
pub fn temporal_report(
    real: &[SequenceWindow],
    synth: &[SequenceWindow],
    n_classes: usize,
    opts: &TemporalOptions,
) -> Result<TemporalReport> {
    let first = real
        .first()
        .ok_or_else(|| Error::InsufficientData("temporal report needs real windows".into()))?;
    let channels = first.channels;
    if real.iter().chain(synth).any(|w| w.channels != channels) {
        return Err(Error::Parameter(
            "real and synthetic windows must share a channel count".into(),
        ));
    }
    let edges = (0..channels)
        .map(|c| BinEdges::spanning(channel_series(real, None, c).iter().flatten(), opts.n_bins))
        .collect::<Result<Vec<_>>>()?;
    let shuffled = time_shuffle(real, opts.shuffle_seed);
    let mut per_class = Vec::with_capacity(n_classes);
    let mut baseline = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        per_class.push(compare(real, synth, class, &edges, opts)?);
        baseline.push(compare(real, &shuffled, class, &edges, opts)?);
    }
    let per_channel_wasserstein1 = if synth.is_empty() {
        Vec::new()
    } else {
        (0..channels)
            .map(|c| {
                wasserstein1(
                    &channel_series(real, None, c).concat(),
                    &channel_series(synth, None, c).concat(),
                )
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(TemporalReport {
        per_class,
        per_channel_wasserstein1,
        shuffle_baseline: ShuffleBaseline {
            seed: opts.shuffle_seed,
            per_class: baseline,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub confusion_matrix: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

pub fn classifier_metrics(m: &ConfusionMatrix) -> ClassifierMetrics {
    ClassifierMetrics {
        confusion_matrix: m.rows(),
        accuracy: m.accuracy(),
        macro_f1: m.macro_f1(),
        per_class_f1: m.per_class_f1(),
    }
}

/// Trains a forest on summary features of `train` and scores it on `test`.
pub fn evaluate_classifier(
    train: &[SequenceWindow],
    test: &[SequenceWindow],
    n_classes: usize,
    config: &ForestConfig,
    seed: u64,
) -> Result<ConfusionMatrix> {
    let feats = |ws: &[SequenceWindow]| ws.iter().map(extract_features).collect::<Vec<_>>();
    let labels = |ws: &[SequenceWindow]| ws.iter().map(|w| w.label).collect::<Vec<_>>();
    let model = rf_train(&feats(train), &labels(train), n_classes, config, seed)?;
    ConfusionMatrix::from_predictions(&labels(test), &rf_predict(&model, &feats(test))?, n_classes)
}

/// Everything the evaluation step produces, tagged with the resolved
/// configuration and a hash of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: BTreeMap<String, String>,
    pub input_hash: String,
    pub n_classes: usize,
    pub channels: usize,
    pub per_class: Vec<ClassMetrics>,
    pub per_channel_wasserstein1: Vec<f64>,
    pub shuffle_baseline: ShuffleBaseline,
    pub confusion_matrix: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

impl EvalReport {
    pub fn new(
        config: BTreeMap<String, String>,
        input_hash: String,
        channels: usize,
        temporal: TemporalReport,
        classifier: ClassifierMetrics,
    ) -> Self {
        EvalReport {
            config,
            input_hash,
            n_classes: classifier.per_class_f1.len(),
            channels,
            per_class: temporal.per_class,
            per_channel_wasserstein1: temporal.per_channel_wasserstein1,
            shuffle_baseline: temporal.shuffle_baseline,
            confusion_matrix: classifier.confusion_matrix,
            accuracy: classifier.accuracy,
            macro_f1: classifier.macro_f1,
            per_class_f1: classifier.per_class_f1,
        }
    }

    /// Class-averaged means of the three distances over populated classes.
    pub fn mean_distances(&self) -> ChannelMetrics {
        let all: Vec<&ChannelMetrics> =
            self.per_class.iter().flat_map(|c| &c.per_channel).collect();
        let n = all.len().max(1) as f64;
        ChannelMetrics {
            bigram_distance: all.iter().map(|m| m.bigram_distance).sum::<f64>() / n,
            acf_distance: all.iter().map(|m| m.acf_distance).sum::<f64>() / n,
            wasserstein1: all.iter().map(|m| m.wasserstein1).sum::<f64>() / n,
        }
    }
}
