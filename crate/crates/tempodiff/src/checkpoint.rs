//! Binary training checkpoints.
//!
//! Layout (little-endian): magic, a length-prefixed UTF-8 block of
//! `key = value` metadata, the parameter tensors with their AdamW moments,
//! the generator state, and a trailing SHA-256 of everything before it.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use sha2::{Digest, Sha256};
use tempodiff_core::model::{Denoiser, DenoiserConfig, DenoiserParams};
use tempodiff_core::nn::{AdamW, AdamWConfig};
use tempodiff_core::Rng;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const CHECKPOINT_MAGIC: &[u8] = b"TEMPODIFF-CKPT-v1\n";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume training or to sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub model: Denoiser,
    pub optimizer: AdamW,
    pub rng: Rng,
    pub epochs_done: usize,
    /// Content hash of the dataset the model was trained on.
    pub dataset_hash: String,
    pub quantile_fingerprint: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(CliError::format(self.path, "checkpoint is truncated"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.buf.len() {
            return Err(CliError::format(
                self.path,
                "checkpoint length field exceeds file size",
            ));
        }
        Ok(n)
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len()?;
        self.take(n)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        let raw = self.take(
            n.checked_mul(8)
                .ok_or_else(|| CliError::format(self.path, "bad length"))?,
        )?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn metadata(ck: &Checkpoint) -> BTreeMap<String, String> {
    let d = &ck.model.config;
    let mut m: BTreeMap<String, String> = ck
        .config
        .to_map()
        .into_iter()
        .map(|(k, v)| (format!("config.{k}"), v))
        .collect();
    for (k, v) in [
        ("model.channels", d.channels.to_string()),
        ("model.seq_len", d.seq_len.to_string()),
        ("model.n_classes", d.n_classes.to_string()),
        ("model.trained", ck.model.trained.to_string()),
        ("epochs_done", ck.epochs_done.to_string()),
        ("step", ck.optimizer.step_count().to_string()),
        ("dataset_hash", ck.dataset_hash.clone()),
        (
            "quantile_fingerprint",
            format!("{:016x}", ck.quantile_fingerprint),
        ),
        (
            "adamw.weight_decay",
            format!("{:?}", ck.optimizer.config.weight_decay),
        ),
        ("adamw.beta1", format!("{:?}", ck.optimizer.config.beta1)),
        ("adamw.beta2", format!("{:?}", ck.optimizer.config.beta2)),
        (
            "adamw.epsilon",
            format!("{:?}", ck.optimizer.config.epsilon),
        ),
    ] {
        m.insert(k.to_string(), v);
    }
    m
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(CHECKPOINT_MAGIC.to_vec());
        let meta: String = metadata(self)
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        w.bytes(meta.as_bytes());
        let params = self.model.params.params();
        w.u64(params.len() as u64);
        for (i, p) in params.iter().enumerate() {
            w.bytes(p.name().as_bytes());
            w.u64(p.shape().len() as u64);
            p.shape().iter().for_each(|&d| w.u64(d as u64));
            w.f64s(&p.value);
            w.f64s(&self.optimizer.first_moments()[i]);
            w.f64s(&self.optimizer.second_moments()[i]);
        }
        w.0.extend_from_slice(&self.rng.get_seed());
        w.u64(self.rng.get_stream());
        w.0.extend_from_slice(&self.rng.get_word_pos().to_le_bytes());
        let digest = Sha256::digest(&w.0);
        w.0.extend_from_slice(&digest);
        w.0
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < CHECKPOINT_MAGIC.len() + 32 || !bytes.starts_with(CHECKPOINT_MAGIC) {
            return Err(CliError::format(path, "not a tempodiff checkpoint"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CliError::format(path, "checkpoint checksum mismatch"));
        }
        let mut r = Reader {
            buf: &body[CHECKPOINT_MAGIC.len()..],
            path,
        };
        let meta_text = std::str::from_utf8(r.bytes()?)
            .map_err(|_| CliError::format(path, "metadata is not UTF-8"))?;
        let mut meta = BTreeMap::new();
        for line in meta_text.lines() {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| CliError::format(path, format!("bad metadata line {line:?}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| {
            meta.get(k)
                .ok_or_else(|| CliError::format(path, format!("missing metadata {k}")))
        };
        let num = |k: &str| -> Result<u64> {
            get(k)?
                .parse()
                .map_err(|_| CliError::format(path, format!("bad metadata {k}")))
        };
        let float = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| CliError::format(path, format!("bad metadata {k}")))
        };
        let config_map: BTreeMap<String, String> = meta
            .iter()
            .filter_map(|(k, v)| {
                k.strip_prefix("config.")
                    .map(|k| (k.to_string(), v.clone()))
            })
            .collect();
        let config =
            RunConfig::from_map(&config_map).map_err(|e| CliError::format(path, e.to_string()))?;
        let model_cfg: DenoiserConfig = config.denoiser(
            num("model.channels")? as usize,
            num("model.seq_len")? as usize,
            num("model.n_classes")? as usize,
        );
        let mut params = DenoiserParams::zeros(&model_cfg)?;
        let n = r.u64()? as usize;
        let (mut entries, mut m, mut v) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for _ in 0..n {
            let name = String::from_utf8(r.bytes()?.to_vec())
                .map_err(|_| CliError::format(path, "bad tensor name"))?;
            let rank = r.u64()? as usize;
            if rank > 3 {
                return Err(CliError::format(
                    path,
                    format!("tensor {name} has rank {rank}"),
                ));
            }
            let shape = (0..rank)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            entries.push((name, shape, r.f64s()?));
            m.push(r.f64s()?);
            v.push(r.f64s()?);
        }
        params.load_values(&entries)?;
        let adam_cfg = AdamWConfig {
            weight_decay: float("adamw.weight_decay")?,
            beta1: float("adamw.beta1")?,
            beta2: float("adamw.beta2")?,
            epsilon: float("adamw.epsilon")?,
        };
        let optimizer = AdamW::from_parts(adam_cfg, m, v, num("step")?)?;
        let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let stream = r.u64()?;
        let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));
        if !r.buf.is_empty() {
            return Err(CliError::format(path, "trailing bytes in checkpoint"));
        }
        let mut rng = Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        let trained = get("model.trained")? == "true";
        Ok(Checkpoint {
            config,
            model: Denoiser {
                config: model_cfg,
                params,
                trained,
            },
            optimizer,
            rng,
            epochs_done: num("epochs_done")? as usize,
            dataset_hash: get("dataset_hash")?.clone(),
            quantile_fingerprint: u64::from_str_radix(get("quantile_fingerprint")?, 16)
                .map_err(|_| CliError::format(path, "bad quantile fingerprint"))?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Human-readable companion manifest.
    pub fn manifest_json(&self) -> Result<String> {
        let d = &self.model.config;
        let value = serde_json::json!({
            "format": "tempodiff-checkpoint",
            "checkpoint_version": CHECKPOINT_VERSION,
            "config_schema_version": crate::config::CONFIG_SCHEMA_VERSION,
            "model": {
                "channels": d.channels,
                "seq_len": d.seq_len,
                "n_classes": d.n_classes,
                "diffusion_steps": d.diffusion_steps,
                "d_t": d.d_t,
                "d_c": d.d_c,
                "d_hidden": d.d_hidden,
                "dropout_rate": d.dropout_rate,
                "adapters_enabled": d.adapters_enabled,
                "adapter_blocks": d.adapter_blocks,
                "dropout_after_each_conv": d.dropout_after_each_conv,
                "parameter_count": d.param_count(),
            },
            "schedule": {
                "kind": "cosine",
                "steps": d.diffusion_steps,
                "offset": self.config.schedule_offset,
                "beta_clip": self.config.beta_clip,
            },
            "seed": self.config.seed,
            "epochs_done": self.epochs_done,
            "step": self.optimizer.step_count(),
            "dataset_hash": self.dataset_hash,
            "quantile_fingerprint": format!("{:016x}", self.quantile_fingerprint),
            "config": self.config.to_map(),
        });
        Ok(serde_json::to_string_pretty(&value)? + "\n")
    }
}
