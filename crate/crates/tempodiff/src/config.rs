//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use tempodiff_core::data::{SegmentConfig, ToyConfig};
use tempodiff_core::eval::{ForestConfig, TemporalOptions};
use tempodiff_core::model::{DenoiserConfig, TrainConfig};

use crate::error::{CliError, Result};

/// Version of the key set below; bumped when keys change meaning.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

trait ConfigValue: Sized {
    fn parse(s: &str) -> Option<Self>;
    fn render(&self) -> String;
}

macro_rules! scalar_value {
    ($($ty:ty),*) => {$(
        impl ConfigValue for $ty {
            fn parse(s: &str) -> Option<Self> {
                s.parse().ok()
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

scalar_value!(u32, u64, usize);

impl ConfigValue for f64 {
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok().filter(|v: &f64| v.is_finite())
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for bool {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "on" | "yes" | "1" => Some(true),
            "false" | "off" | "no" | "0" => Some(false),
            _ => None,
        }
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl<T: ConfigValue> ConfigValue for Vec<T> {
    fn parse(s: &str) -> Option<Self> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(T::parse)
            .collect()
    }
    fn render(&self) -> String {
        self.iter().map(T::render).collect::<Vec<_>>().join(",")
    }
}

macro_rules! run_config {
    ($( $(#[$doc:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?) => {
        /// Every tunable of the pipeline. Resolution order is built-in
        /// defaults, then a config file, then command-line overrides.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $( $(#[$doc])* pub $field: $ty, )*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $( $field: $default, )* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            /// Sets one key from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                let value = value.trim();
                match key.trim() {
                    $( stringify!($field) => {
                        self.$field = ConfigValue::parse(value).ok_or_else(|| {
                            CliError::Usage(format!("invalid value {value:?} for {}", stringify!($field)))
                        })?;
                    } )*
                    other => return Err(CliError::Usage(format!("unknown config key {other:?}"))),
                }
                Ok(())
            }

            /// The resolved configuration as sorted key/value strings.
            pub fn to_map(&self) -> BTreeMap<String, String> {
                let mut m = BTreeMap::new();
                $( m.insert(stringify!($field).to_string(), self.$field.render()); )*
                m
            }
        }
    };
}

run_config! {
    seed: u64 = 0,
    /// Diffusion steps of the cosine schedule.
    diffusion_steps: usize = 1000,
    schedule_offset: f64 = 0.008,
    beta_clip: f64 = 0.999,
    seq_len: usize = 100,
    overlap: usize = 50,
    max_gap_ms: u64 = 500,
    /// Raw timestamp ticks per millisecond (WISDM files count nanoseconds).
    ticks_per_ms: u64 = 1_000_000,
    /// Participants to keep; empty selects the `first_users` lowest ids.
    users: Vec<u32> = Vec::new(),
    first_users: usize = 5,
    n_quantiles: usize = 1000,
    missing_rate: f64 = 0.0,
    test_frac: f64 = 0.2,
    val_frac: f64 = 0.2,
    toy_counts: Vec<usize> = Vec::new(),
    toy_classes: usize = 3,
    toy_channels: usize = 3,
    d_t: usize = 32,
    d_c: usize = 16,
    d_hidden: usize = 128,
    dropout: f64 = 0.1,
    dropout_after_each_conv: bool = true,
    adapters: bool = true,
    adapter_blocks: usize = 1,
    lr: f64 = 1e-3,
    weight_decay: f64 = 1e-5,
    batch_size: usize = 64,
    epochs: usize = 50,
    patience: usize = 10,
    min_delta: f64 = 1e-4,
    clip_norm: f64 = 1.0,
    warmup_steps: u64 = 0,
    mask_loss: bool = false,
    sample_chunk: usize = 64,
    n_bins: usize = 20,
    max_lag: usize = 50,
    n_trees: usize = 100,
    /// 0 means unlimited.
    max_depth: usize = 0,
    min_samples_leaf: usize = 1,
    smote_k: usize = 5,
}

impl RunConfig {
    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::format(origin, format!("line {}: expected key = value", n + 1))
            })?;
            if !seen.insert(k.trim().to_string()) {
                return Err(CliError::format(
                    origin,
                    format!("line {}: duplicate key {}", n + 1, k.trim()),
                ));
            }
            self.set(k, v)
                .map_err(|e| CliError::format(origin, format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Applies `key=value` override strings.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o.as_ref().split_once('=').ok_or_else(|| {
                CliError::Usage(format!("override {:?} is not key=value", o.as_ref()))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Rebuilds a configuration from a stored map; every key must be known.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut c = RunConfig::default();
        for (k, v) in map {
            c.set(k, v)?;
        }
        Ok(c)
    }

    /// `key = value` lines in key order.
    pub fn to_text(&self) -> String {
        self.to_map()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn denoiser(&self, channels: usize, seq_len: usize, n_classes: usize) -> DenoiserConfig {
        DenoiserConfig {
            channels,
            seq_len,
            diffusion_steps: self.diffusion_steps,
            d_t: self.d_t,
            d_c: self.d_c,
            n_classes,
            d_hidden: self.d_hidden,
            dropout_rate: self.dropout,
            adapters_enabled: self.adapters,
            adapter_blocks: self.adapter_blocks,
            dropout_after_each_conv: self.dropout_after_each_conv,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            lr: self.lr,
            weight_decay: self.weight_decay,
            clip_norm: self.clip_norm,
            epochs: self.epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            warmup_steps: self.warmup_steps,
            mask_loss: self.mask_loss,
        }
    }

    pub fn segment(&self) -> SegmentConfig {
        SegmentConfig {
            seq_len: self.seq_len,
            overlap: self.overlap,
            max_gap_ms: self.max_gap_ms,
        }
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            max_depth: (self.max_depth > 0).then_some(self.max_depth),
            min_samples_leaf: self.min_samples_leaf,
            max_features: None,
        }
    }

    pub fn temporal(&self) -> TemporalOptions {
        TemporalOptions {
            n_bins: self.n_bins,
            max_lag: self.max_lag,
            shuffle_seed: self.seed,
        }
    }

    /// Toy generator settings; `toy_counts` overrides the balanced count.
    pub fn toy(&self, n_per_class: usize) -> ToyConfig {
        let mut t = ToyConfig::balanced(
            n_per_class,
            self.toy_classes,
            self.seq_len,
            self.toy_channels,
        );
        if !self.toy_counts.is_empty() {
            t.class_counts = self.toy_counts.clone();
        }
        t
    }
}
