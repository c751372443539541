use alloc::vec::Vec;

use super::{LabeledWindow, RawRecord};
use crate::model::ActivityLabel;
use crate::{Error, Result};

/// Window length, overlap and the timestamp gap that breaks a contiguous
/// run (ten nominal 20 Hz periods by default).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub seq_len: usize,
    pub overlap: usize,
    pub max_gap_ms: u64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            seq_len: 100,
            overlap: 50,
            max_gap_ms: 500,
        }
    }
}

impl SegmentConfig {
    pub fn stride(&self) -> usize {
        self.seq_len - self.overlap
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len == 0 || self.overlap >= self.seq_len {
            return Err(Error::Parameter(alloc::format!(
                "need 0 <= overlap < seq_len, got overlap {} and seq_len {}",
                self.overlap,
                self.seq_len
            )));
        }
        Ok(())
    }
}

/// Number of windows in a run of `run_len` samples.
pub fn window_count(run_len: usize, seq_len: usize, stride: usize) -> usize {
    if run_len < seq_len || stride == 0 {
        0
    } else {
        (run_len - seq_len) / stride + 1
    }
}

/// Most frequent label; ties go to the lowest id.
pub fn dominant_label(labels: &[usize]) -> Option<usize> {
    let max = *labels.iter().max()?;
    let mut counts = alloc::vec![0usize; max + 1];
    for &l in labels {
        counts[l] += 1;
    }
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Some(best)
}

/// Cuts overlapping windows out of contiguous per-user runs. Records are
/// grouped by user in order of first appearance; within a user a run ends
/// at a backwards or overlong timestamp step. Windows may span activity
/// changes and take the dominant label.
pub fn segment_windows(
    records: &[RawRecord],
    config: &SegmentConfig,
) -> Result<Vec<LabeledWindow>> {
    config.validate()?;
    let mut users: Vec<u32> = Vec::new();
    for r in records {
        if !users.contains(&r.user) {
            users.push(r.user);
        }
    }
    let mut out = Vec::new();
    for user in users {
        let group: Vec<&RawRecord> = records.iter().filter(|r| r.user == user).collect();
        let mut start = 0;
        for i in 1..=group.len() {
            let breaks = i == group.len() || {
                let (prev, cur) = (group[i - 1].timestamp_ms, group[i].timestamp_ms);
                cur < prev || cur - prev > config.max_gap_ms
            };
            if breaks {
                push_run(&group[start..i], config, &mut out);
                start = i;
            }
        }
    }
    Ok(out)
}

fn push_run(run: &[&RawRecord], config: &SegmentConfig, out: &mut Vec<LabeledWindow>) {
    let n = window_count(run.len(), config.seq_len, config.stride());
    for w in 0..n {
        let slice = &run[w * config.stride()..w * config.stride() + config.seq_len];
        let labels: Vec<usize> = slice.iter().map(|r| r.activity.id()).collect();
        let label = dominant_label(&labels).unwrap_or(ActivityLabel::Downstairs.id());
        out.push(LabeledWindow {
            len: config.seq_len,
            channels: 3,
            values: slice.iter().flat_map(|r| r.values()).collect(),
            label,
            user: slice[0].user,
        });
    }
}
