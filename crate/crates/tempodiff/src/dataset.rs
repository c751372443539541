//! The on-disk dataset cache: split CSVs, the quantile-map sidecar and a
//! JSON manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempodiff_core::data::{DatasetSplit, QuantileMap, SequenceWindow};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{
    quantile_map_from_text, quantile_map_to_text, read_text, sha256_hex, windows_from_csv,
    windows_to_csv, write_text,
};

pub const DATASET_FORMAT: &str = "tempodiff-dataset-v1";
const SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    source: String,
    channels: usize,
    seq_len: usize,
    n_classes: usize,
    quantile_fingerprint: String,
    input_hash: String,
    content_hash: String,
    skipped_lines: usize,
    class_counts: BTreeMap<String, Vec<usize>>,
    augment_method: Option<String>,
    augment_count: usize,
    config: BTreeMap<String, String>,
}

/// Normalized, split windows plus the map that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: RunConfig,
    /// `toy` or `raw`.
    pub source: String,
    pub channels: usize,
    pub seq_len: usize,
    pub n_classes: usize,
    pub map: QuantileMap,
    pub split: DatasetSplit,
    /// Synthetic training windows added by balancing.
    pub augment: Vec<SequenceWindow>,
    pub augment_method: Option<String>,
    /// Hash of the raw input (file bytes or toy settings).
    pub input_hash: String,
    pub skipped_lines: usize,
}

fn fingerprint_hex(map: &QuantileMap) -> String {
    format!("{:016x}", map.fingerprint())
}

impl Dataset {
    /// Training windows for the classifier: the real split plus any
    /// balancing additions.
    pub fn training_set(&self) -> Vec<SequenceWindow> {
        let mut v = self.split.train.clone();
        v.extend(self.augment.iter().cloned());
        v
    }

    fn comments(&self, part: &str) -> Vec<(String, String)> {
        let mut c = vec![
            ("format".to_string(), DATASET_FORMAT.to_string()),
            ("split".to_string(), part.to_string()),
            (
                "quantile_fingerprint".to_string(),
                fingerprint_hex(&self.map),
            ),
            ("input_hash".to_string(), self.input_hash.clone()),
        ];
        c.extend(
            self.config
                .to_map()
                .into_iter()
                .map(|(k, v)| (format!("config.{k}"), v)),
        );
        c
    }

    fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![(
            "quantile_map.txt".to_string(),
            quantile_map_to_text(&self.map),
        )];
        for (name, part) in
            SPLITS
                .iter()
                .zip([&self.split.train, &self.split.val, &self.split.test])
        {
            files.push((
                format!("{name}.csv"),
                windows_to_csv(part, self.channels, &self.comments(name)),
            ));
        }
        if !self.augment.is_empty() {
            files.push((
                "augment.csv".to_string(),
                windows_to_csv(&self.augment, self.channels, &self.comments("augment")),
            ));
        }
        files
    }

    fn hash_files(files: &[(String, String)]) -> String {
        sha256_hex(files.iter().flat_map(|(n, t)| [n.as_bytes(), t.as_bytes()]))
    }

    /// Hash over the serialized cache files; identical for identical data.
    pub fn content_hash(&self) -> String {
        Self::hash_files(&self.files())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let augment_path = dir.join("augment.csv");
        if self.augment.is_empty() && augment_path.exists() {
            std::fs::remove_file(&augment_path).map_err(|e| CliError::io(&augment_path, e))?;
        }
        let files = self.files();
        for (name, text) in &files {
            write_text(&dir.join(name), text)?;
        }
        let counts = self.split.class_counts(self.n_classes);
        let manifest = Manifest {
            format: DATASET_FORMAT.to_string(),
            source: self.source.clone(),
            channels: self.channels,
            seq_len: self.seq_len,
            n_classes: self.n_classes,
            quantile_fingerprint: fingerprint_hex(&self.map),
            input_hash: self.input_hash.clone(),
            content_hash: Self::hash_files(&files),
            skipped_lines: self.skipped_lines,
            class_counts: SPLITS.iter().map(|s| s.to_string()).zip(counts).collect(),
            augment_method: self.augment_method.clone(),
            augment_count: self.augment.len(),
            config: self.config.to_map(),
        };
        write_text(
            &dir.join("manifest.json"),
            &(serde_json::to_string_pretty(&manifest)? + "\n"),
        )
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("manifest.json");
        let manifest: Manifest = serde_json::from_str(&read_text(&manifest_path)?)
            .map_err(|e| CliError::format(&manifest_path, e.to_string()))?;
        if manifest.format != DATASET_FORMAT {
            return Err(CliError::format(
                &manifest_path,
                format!("unsupported format {}", manifest.format),
            ));
        }
        let config = RunConfig::from_map(&manifest.config)
            .map_err(|e| CliError::format(&manifest_path, e.to_string()))?;
        let map_path = dir.join("quantile_map.txt");
        let map = quantile_map_from_text(&read_text(&map_path)?, &map_path)?;
        if fingerprint_hex(&map) != manifest.quantile_fingerprint {
            return Err(CliError::format(
                &map_path,
                "quantile map fingerprint does not match the manifest",
            ));
        }
        let load = |name: &str| -> Result<Vec<SequenceWindow>> {
            let p = dir.join(format!("{name}.csv"));
            windows_from_csv(&read_text(&p)?, &p)
        };
        let augment = if manifest.augment_count > 0 {
            load("augment")?
        } else {
            Vec::new()
        };
        let ds = Dataset {
            config,
            source: manifest.source,
            channels: manifest.channels,
            seq_len: manifest.seq_len,
            n_classes: manifest.n_classes,
            map,
            split: DatasetSplit {
                train: load("train")?,
                val: load("val")?,
                test: load("test")?,
            },
            augment,
            augment_method: manifest.augment_method,
            input_hash: manifest.input_hash,
            skipped_lines: manifest.skipped_lines,
        };
        if ds.content_hash() != manifest.content_hash {
            return Err(CliError::format(
                &manifest_path,
                "dataset files do not match the manifest content hash",
            ));
        }
        let bad_shape = ds
            .split
            .train
            .iter()
            .chain(&ds.split.val)
            .chain(&ds.split.test)
            .chain(&ds.augment)
            .any(|w| w.len != ds.seq_len || w.channels != ds.channels || w.label >= ds.n_classes);
        if bad_shape || ds.map.channels() != ds.channels {
            return Err(CliError::format(
                dir,
                "windows do not match the manifest shape",
            ));
        }
        Ok(ds)
    }
}
