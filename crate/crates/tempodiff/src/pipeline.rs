//! The end-to-end steps behind each command, as plain functions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use tempodiff_core::data::{
    parse_raw_str, prepare_windows, segment_windows, stratified_split, toy_dataset, DatasetSplit,
    LabeledWindow, QuantileMap, SequenceWindow,
};
use tempodiff_core::diffusion::{NoiseSchedule, SampleOptions};
use tempodiff_core::eval::{
    acf, balance_with_synthetic, bigram_matrix, channel_series, classifier_metrics,
    evaluate_classifier, temporal_report, BinEdges, DiffusionGenerator, EvalReport, SmoteGenerator,
    WindowGenerator,
};
use tempodiff_core::model::{fit, ActivityLabel, Denoiser, EpochRecord, FitReport, TrainState};
use tempodiff_core::nn::LrSchedule;
use tempodiff_core::{rng_stream, Error};

use crate::checkpoint::Checkpoint;
use crate::config::{RunConfig, CONFIG_SCHEMA_VERSION};
use crate::dataset::Dataset;
use crate::error::{CliError, Result};
use crate::formats::sha256_hex;

const STREAM_TOY: u64 = 100;
const STREAM_MASK: u64 = 200;
const STREAM_INIT: u64 = 300;
const STREAM_SAMPLE: u64 = 400;
const STREAM_SMOTE: u64 = 500;
const STREAM_BALANCE: u64 = 600;
const VALIDATION_SEED_MIX: u64 = 0x5eed_0f_7a11;

pub fn schedule(config: &RunConfig) -> Result<NoiseSchedule> {
    Ok(NoiseSchedule::cosine_with(
        config.diffusion_steps,
        config.schedule_offset,
        config.beta_clip,
    )?)
}

fn build_dataset(
    config: &RunConfig,
    windows: Vec<LabeledWindow>,
    n_classes: usize,
    channels: usize,
    source: &str,
    input_hash: String,
    skipped_lines: usize,
) -> Result<Dataset> {
    if windows.is_empty() {
        return Err(
            Error::InsufficientData("no windows could be cut from the input".into()).into(),
        );
    }
    let labels: Vec<usize> = windows.iter().map(|w| w.label).collect();
    let idx = stratified_split(&labels, config.test_frac, config.val_frac, config.seed)?;
    let (train, val, test) = idx.apply(&windows);
    if train.is_empty() {
        return Err(Error::InsufficientData("the training split is empty".into()).into());
    }
    let train_values: Vec<f64> = train
        .iter()
        .flat_map(|w| w.values.iter().copied())
        .collect();
    let map = QuantileMap::fit(&train_values, channels, config.n_quantiles)?;
    let fingerprint = map.fingerprint();
    let mut parts = Vec::with_capacity(3);
    for (i, part) in [&train, &val, &test].into_iter().enumerate() {
        assert_eq!(
            map.fingerprint(),
            fingerprint,
            "quantile map changed between transforms"
        );
        parts.push(prepare_windows(
            part,
            &map,
            config.missing_rate,
            &mut rng_stream(config.seed, STREAM_MASK + i as u64),
        )?);
    }
    let test = parts.pop().expect("three parts");
    let val = parts.pop().expect("three parts");
    let train = parts.pop().expect("three parts");
    Ok(Dataset {
        config: config.clone(),
        source: source.to_string(),
        channels,
        seq_len: windows[0].len,
        n_classes,
        map,
        split: DatasetSplit { train, val, test },
        augment: Vec::new(),
        augment_method: None,
        input_hash,
        skipped_lines,
    })
}

/// Builds a dataset from the built-in generator, treating its values as
/// raw sensor units.
pub fn ingest_toy(config: &RunConfig, n_per_class: usize) -> Result<Dataset> {
    let toy = config.toy(n_per_class);
    let windows = toy_dataset(&toy, &mut rng_stream(config.seed, STREAM_TOY))?;
    let labeled = windows
        .into_iter()
        .map(|w| LabeledWindow {
            len: w.len,
            channels: w.channels,
            values: w.x0,
            label: w.label,
            user: w.user,
        })
        .collect();
    let hash = sha256_hex([b"toy".as_slice(), format!("{toy:?}").as_bytes()]);
    build_dataset(
        config,
        labeled,
        toy.n_classes(),
        toy.channels,
        "toy",
        hash,
        0,
    )
}

/// Parses, filters, windows and normalizes a raw accelerometer file.
pub fn ingest_raw(config: &RunConfig, text: &str) -> Result<Dataset> {
    let parsed = parse_raw_str(text, config.ticks_per_ms, None)?;
    let users: Vec<u32> = if config.users.is_empty() {
        let mut all: Vec<u32> = parsed.records.iter().map(|r| r.user).collect();
        all.sort_unstable();
        all.dedup();
        all.truncate(config.first_users);
        all
    } else {
        config.users.clone()
    };
    let records: Vec<_> = parsed
        .records
        .into_iter()
        .filter(|r| users.contains(&r.user))
        .collect();
    log::info!(
        "{} records from users {users:?}, {} malformed lines skipped",
        records.len(),
        parsed.skipped
    );
    let windows = segment_windows(&records, &config.segment())?;
    let hash = sha256_hex([b"raw".as_slice(), text.as_bytes()]);
    build_dataset(
        config,
        windows,
        ActivityLabel::ALL.len(),
        3,
        "raw",
        hash,
        parsed.skipped,
    )
}

/// Trains from scratch or resumes a checkpoint up to `config.epochs`.
pub fn train(
    dataset: &Dataset,
    config: &RunConfig,
    resume: Option<Checkpoint>,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Checkpoint, FitReport)> {
    let model_cfg = config.denoiser(dataset.channels, dataset.seq_len, dataset.n_classes);
    model_cfg.validate()?;
    let sched = schedule(config)?;
    let tc = config.train();
    let total = (config.epochs * tc.batches_per_epoch(dataset.split.train.len())) as u64;
    let dataset_hash = dataset.content_hash();
    let (mut model, mut state, first_epoch) = match resume {
        Some(ck) => {
            if ck.model.config != model_cfg {
                return Err(CliError::Usage(
                    "checkpoint model settings differ from the current configuration".into(),
                ));
            }
            if ck.dataset_hash != dataset_hash {
                return Err(CliError::Usage(
                    "checkpoint was trained on a different dataset".into(),
                ));
            }
            let state = TrainState {
                optimizer: ck.optimizer,
                lr_schedule: LrSchedule::new(tc.lr, total.max(1), tc.warmup_steps)?,
                rng: ck.rng,
            };
            (ck.model, state, ck.epochs_done)
        }
        None => {
            let model = Denoiser::new(model_cfg, &mut rng_stream(config.seed, STREAM_INIT))?;
            let state = TrainState::new(&model.params, &tc, total, config.seed)?;
            (model, state, 0)
        }
    };
    let report = fit(
        &dataset.split.train,
        &dataset.split.val,
        &mut model.params,
        &model_cfg,
        &sched,
        &tc,
        &mut state,
        config.seed ^ VALIDATION_SEED_MIX,
        first_epoch,
        on_epoch,
    )?;
    let epochs_done = first_epoch + report.history.len();
    model.trained = epochs_done > 0;
    let ck = Checkpoint {
        config: config.clone(),
        model,
        optimizer: state.optimizer,
        rng: state.rng,
        epochs_done,
        dataset_hash,
        quantile_fingerprint: dataset.map.fingerprint(),
    };
    Ok((ck, report))
}

fn check_map(ck: &Checkpoint, dataset: &Dataset) -> Result<()> {
    if ck.quantile_fingerprint != dataset.map.fingerprint() {
        return Err(CliError::Usage(
            "checkpoint was trained with a different quantile map than this dataset".into(),
        ));
    }
    Ok(())
}

fn sample_options(ck: &Checkpoint) -> SampleOptions {
    SampleOptions {
        chunk_size: ck.config.sample_chunk,
        ..SampleOptions::default()
    }
}

/// Class sizes of the training split.
pub fn train_counts(dataset: &Dataset) -> Vec<usize> {
    dataset.split.class_counts(dataset.n_classes)[0].clone()
}

/// Draws `counts[k]` normalized sequences of each class `k`.
pub fn sample(
    ck: &Checkpoint,
    dataset: &Dataset,
    counts: &[usize],
    seed: u64,
) -> Result<Vec<SequenceWindow>> {
    check_map(ck, dataset)?;
    let sched = schedule(&ck.config)?;
    let mut out = Vec::with_capacity(counts.iter().sum());
    for (class, &n) in counts.iter().enumerate().filter(|(_, &n)| n > 0) {
        let mut generator = DiffusionGenerator {
            model: &ck.model,
            schedule: &sched,
            rng: rng_stream(seed, STREAM_SAMPLE + class as u64),
            options: sample_options(ck),
        };
        out.extend(generator.generate(class, n)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceMethod {
    Tempodiff,
    Smote,
}

impl BalanceMethod {
    pub fn name(self) -> &'static str {
        match self {
            BalanceMethod::Tempodiff => "tempodiff",
            BalanceMethod::Smote => "smote",
        }
    }
}

/// Returns a copy of `dataset` whose minority training classes are topped
/// up to the majority count.
pub fn balance(
    dataset: &Dataset,
    method: BalanceMethod,
    ck: Option<&Checkpoint>,
    config: &RunConfig,
) -> Result<Dataset> {
    let train = &dataset.split.train;
    let augmented = match method {
        BalanceMethod::Smote => {
            let mut generator = SmoteGenerator {
                windows: train,
                k: config.smote_k,
                rng: rng_stream(config.seed, STREAM_SMOTE),
            };
            balance_with_synthetic(train, dataset.n_classes, &mut generator)?
        }
        BalanceMethod::Tempodiff => {
            let ck = ck.ok_or_else(|| CliError::Usage("--method tempodiff needs --ckpt".into()))?;
            check_map(ck, dataset)?;
            let sched = schedule(&ck.config)?;
            let mut generator = DiffusionGenerator {
                model: &ck.model,
                schedule: &sched,
                rng: rng_stream(config.seed, STREAM_BALANCE),
                options: sample_options(ck),
            };
            balance_with_synthetic(train, dataset.n_classes, &mut generator)?
        }
    };
    let mut out = dataset.clone();
    out.augment = augmented[train.len()..].to_vec();
    out.augment_method = Some(method.name().to_string());
    Ok(out)
}

/// Temporal fidelity of `synth` against the real test split, and a forest
/// trained on the dataset's training windows scored on the same split.
pub fn evaluate(
    dataset: &Dataset,
    synth: &[SequenceWindow],
    synth_hash: &str,
    config: &RunConfig,
) -> Result<EvalReport> {
    let temporal = temporal_report(
        &dataset.split.test,
        synth,
        dataset.n_classes,
        &config.temporal(),
    )?;
    let training = dataset.training_set();
    let cm = evaluate_classifier(
        &training,
        &dataset.split.test,
        dataset.n_classes,
        &config.forest(),
        config.seed,
    )?;
    let mut meta: BTreeMap<String, String> = config.to_map();
    meta.insert(
        "method".into(),
        dataset
            .augment_method
            .clone()
            .unwrap_or_else(|| "real".into()),
    );
    meta.insert("source".into(), dataset.source.clone());
    meta.insert(
        "config_schema_version".into(),
        CONFIG_SCHEMA_VERSION.to_string(),
    );
    meta.insert("real_reference".into(), "test".into());
    let input_hash = sha256_hex([dataset.content_hash().as_bytes(), synth_hash.as_bytes()]);
    Ok(EvalReport::new(
        meta,
        input_hash,
        dataset.channels,
        temporal,
        classifier_metrics(&cm),
    ))
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn report_from_json(text: &str) -> Result<EvalReport> {
    Ok(serde_json::from_str(text)?)
}

/// Plot-ready long-format CSVs: bigram matrices, ACF curves and marginal
/// histograms for the real test split and the synthetic set.
pub fn plot_csvs(
    dataset: &Dataset,
    synth: &[SequenceWindow],
    config: &RunConfig,
) -> Result<Vec<(String, String)>> {
    let real = &dataset.split.test;
    let sources = [("real", real.as_slice()), ("synth", synth)];
    let (mut bigram, mut acf_csv, mut hist) = (
        String::from("class,channel,source,row_bin,col_bin,prob\n"),
        String::from("class,channel,source,lag,value\n"),
        String::from("channel,source,bin_left,bin_right,density\n"),
    );
    for c in 0..dataset.channels {
        let pooled = channel_series(real, None, c).concat();
        let edges = BinEdges::spanning(&pooled, config.n_bins)?;
        let bounds = edges.edges();
        for (name, windows) in sources {
            let values = channel_series(windows, None, c).concat();
            let mut counts = vec![0usize; config.n_bins];
            values.iter().for_each(|&v| counts[edges.bin(v)] += 1);
            for b in 0..config.n_bins {
                let width = bounds[b + 1] - bounds[b];
                let density = if values.is_empty() {
                    0.0
                } else {
                    counts[b] as f64 / (values.len() as f64 * width)
                };
                writeln!(hist, "{c},{name},{},{},{density}", bounds[b], bounds[b + 1]).unwrap();
            }
            for class in 0..dataset.n_classes {
                let series = channel_series(windows, Some(class), c);
                if series.is_empty() {
                    continue;
                }
                let m = bigram_matrix(&series, &edges);
                for r in 0..config.n_bins {
                    for k in 0..config.n_bins {
                        writeln!(bigram, "{class},{c},{name},{r},{k},{}", m.prob(r, k)).unwrap();
                    }
                }
                if let Ok(a) = acf(&series, config.max_lag) {
                    for (lag, v) in a.values.iter().enumerate() {
                        writeln!(acf_csv, "{class},{c},{name},{lag},{v}").unwrap();
                    }
                }
            }
        }
    }
    Ok(vec![
        ("bigram.csv".into(), bigram),
        ("acf.csv".into(), acf_csv),
        ("hist.csv".into(), hist),
    ])
}

/// One row per report: method, accuracy, macro-F1 and mean distances.
pub fn comparison_rows(reports: &[(String, EvalReport)]) -> Vec<Vec<String>> {
    let mut rows = vec![[
        "method",
        "accuracy",
        "macro_f1",
        "bigram_dist",
        "acf_dist",
        "w1",
    ]
    .map(String::from)
    .to_vec()];
    for (name, r) in reports {
        let d = r.mean_distances();
        rows.push(vec![
            name.clone(),
            format!("{:.4}", r.accuracy),
            format!("{:.4}", r.macro_f1),
            format!("{:.4}", d.bigram_distance),
            format!("{:.4}", d.acf_distance),
            format!("{:.4}", d.wasserstein1),
        ]);
    }
    rows
}
