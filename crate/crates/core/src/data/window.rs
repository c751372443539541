use alloc::format;
use alloc::vec::Vec;

use crate::nn::Tensor3;
use crate::{Error, Result};

/// A window in original sensor units, row-major `[len × channels]`.
/// Missing source entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow {
    pub len: usize,
    pub channels: usize,
    pub values: Vec<f64>,
    pub label: usize,
    /// Source participant; metadata only.
    pub user: u32,
}

/// One training triplet `(x0, y, M)`: normalized values, class label and
/// binary observation mask, both `[len × channels]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    pub len: usize,
    pub channels: usize,
    pub x0: Vec<f64>,
    pub mask: Vec<f64>,
    pub label: usize,
    /// Source participant; never fed to the model.
    pub user: u32,
}

impl LabeledWindow {
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }
}

impl SequenceWindow {
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.x0
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }
}

/// Stacks `windows[idx]` into `(x0, mask)` tensors plus labels.
pub fn batch_tensors(
    windows: &[SequenceWindow],
    idx: &[usize],
) -> Result<(Tensor3, Tensor3, Vec<usize>)> {
    let first = idx
        .first()
        .map(|&i| &windows[i])
        .ok_or_else(|| Error::InsufficientData("empty batch".into()))?;
    let (len, ch) = (first.len, first.channels);
    let mut x = Vec::with_capacity(idx.len() * len * ch);
    let mut m = Vec::with_capacity(idx.len() * len * ch);
    let mut y = Vec::with_capacity(idx.len());
    for &i in idx {
        let w = &windows[i];
        if w.len != len || w.channels != ch || w.x0.len() != len * ch || w.mask.len() != len * ch {
            return Err(Error::dim(
                "batch_tensors",
                format!("windows of {len}×{ch}"),
                format!("{}×{} with {} values", w.len, w.channels, w.x0.len()),
            ));
        }
        x.extend_from_slice(&w.x0);
        m.extend_from_slice(&w.mask);
        y.push(w.label);
    }
    Ok((
        Tensor3::from_vec(idx.len(), len, ch, x)?,
        Tensor3::from_vec(idx.len(), len, ch, m)?,
        y,
    ))
}
