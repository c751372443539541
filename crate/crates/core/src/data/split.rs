use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::SequenceWindow;
use crate::{rng_stream, Error, Result};

/// Index lists of a train/validation/test partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Gathers `(train, val, test)` copies of `items`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
        (pick(&self.train), pick(&self.val), pick(&self.test))
    }
}

/// Normalized windows after splitting.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetSplit {
    pub train: Vec<SequenceWindow>,
    pub val: Vec<SequenceWindow>,
    pub test: Vec<SequenceWindow>,
}

impl DatasetSplit {
    /// Window counts per class for `[train, val, test]`.
    pub fn class_counts(&self, n_classes: usize) -> [Vec<usize>; 3] {
        let count = |ws: &[SequenceWindow]| {
            let mut c = alloc::vec![0; n_classes];
            for w in ws {
                if w.label < n_classes {
                    c[w.label] += 1;
                }
            }
            c
        };
        [count(&self.train), count(&self.val), count(&self.test)]
    }
}

fn round_share(n: usize, frac: f64) -> usize {
    (libm::round(n as f64 * frac) as usize).min(n)
}

/// Per-class shuffled partition: `round(test_frac·n)` windows to test, then
/// `round(val_frac·rest)` of the remainder to validation.
pub fn stratified_split(
    labels: &[usize],
    test_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(0.0..1.0).contains(&test_frac) || !(0.0..1.0).contains(&val_frac) {
        return Err(Error::Parameter(alloc::format!(
            "split fractions must be in [0, 1), got test {test_frac} and val {val_frac}"
        )));
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() == 1 {
            log::warn!("class {class} has a single window; it goes to the training set");
        }
        idx.shuffle(&mut rng_stream(seed, class as u64));
        let n_test = round_share(idx.len(), test_frac);
        let n_val = round_share(idx.len() - n_test, val_frac);
        out.test.extend_from_slice(&idx[..n_test]);
        out.val.extend_from_slice(&idx[n_test..n_test + n_val]);
        out.train.extend_from_slice(&idx[n_test + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
