use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Equal-width bins over `[lo, hi]`; values outside are clamped to the
/// first or last bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEdges {
    lo: f64,
    hi: f64,
    n_bins: usize,
}

impl BinEdges {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if n_bins == 0 || !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(Error::Parameter(format!(
                "invalid bin range [{lo}, {hi}] with {n_bins} bins"
            )));
        }
        let (lo, hi) = if hi == lo {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        };
        Ok(BinEdges { lo, hi, n_bins })
    }

    /// Bins spanning the range of `values`.
    pub fn spanning<'a>(values: impl IntoIterator<Item = &'a f64>, n_bins: usize) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            if !v.is_finite() {
                return Err(Error::NonFinite("bin_edges"));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            return Err(Error::InsufficientData("no values to bin".into()));
        }
        BinEdges::new(lo, hi, n_bins)
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = (self.hi - self.lo) / self.n_bins as f64;
        (0..=self.n_bins)
            .map(|i| {
                if i == self.n_bins {
                    self.hi
                } else {
                    self.lo + w * i as f64
                }
            })
            .collect()
    }

    pub fn bin(&self, x: f64) -> usize {
        let pos = (x - self.lo) / (self.hi - self.lo) * self.n_bins as f64;
        if pos.is_nan() || pos < 0.0 {
            0
        } else {
            (pos as usize).min(self.n_bins - 1)
        }
    }
}

/// Transition counts between consecutive quantized values.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramMatrix {
    n_bins: usize,
    counts: Vec<u64>,
}

impl BigramMatrix {
    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.counts[from * self.n_bins + to]
    }

    pub fn row_total(&self, from: usize) -> u64 {
        self.counts[from * self.n_bins..(from + 1) * self.n_bins]
            .iter()
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row-normalized transition probability; 0 for empty rows.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        match self.row_total(from) {
            0 => 0.0,
            n => self.count(from, to) as f64 / n as f64,
        }
    }

    /// The full row-normalized matrix, row-major.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.n_bins * self.n_bins)
            .map(|i| self.prob(i / self.n_bins, i % self.n_bins))
            .collect()
    }
}

/// Counts `bin[t] → bin[t+1]` over every sequence.
pub fn bigram_matrix(sequences: &[Vec<f64>], edges: &BinEdges) -> BigramMatrix {
    let n = edges.n_bins();
    let mut counts = vec![0u64; n * n];
    for s in sequences {
        for w in s.windows(2) {
            counts[edges.bin(w[0]) * n + edges.bin(w[1])] += 1;
        }
    }
    BigramMatrix { n_bins: n, counts }
}

/// Mean absolute difference of transition probabilities over the rows
/// occupied in either matrix.
pub fn bigram_distance(a: &BigramMatrix, b: &BigramMatrix) -> Result<f64> {
    if a.n_bins != b.n_bins {
        return Err(Error::dim(
            "bigram_distance",
            format!("{} bins", a.n_bins),
            format!("{} bins", b.n_bins),
        ));
    }
    let n = a.n_bins;
    let (mut sum, mut rows) = (0.0, 0usize);
    for r in 0..n {
        if a.row_total(r) == 0 && b.row_total(r) == 0 {
            continue;
        }
        rows += 1;
        sum += (0..n)
            .map(|c| (a.prob(r, c) - b.prob(r, c)).abs())
            .sum::<f64>();
    }
    Ok(if rows == 0 {
        0.0
    } else {
        sum / (rows * n) as f64
    })
}
