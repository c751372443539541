use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Mean autocorrelation over sequences, lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfSeries {
    pub values: Vec<f64>,
    /// Sequences contributing to the mean.
    pub used: usize,
    /// Zero-variance sequences left out.
    pub excluded: usize,
}

/// Biased autocorrelation estimator computed per sequence and averaged.
/// Lags at or beyond a sequence's length contribute 0.
pub fn acf(sequences: &[Vec<f64>], max_lag: usize) -> Result<AcfSeries> {
    let mut sum = vec![0.0; max_lag + 1];
    let (mut used, mut excluded) = (0, 0);
    for s in sequences {
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("acf"));
        }
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let den: f64 = s.iter().map(|v| (v - mean) * (v - mean)).sum();
        if s.is_empty() || den == 0.0 {
            excluded += 1;
            continue;
        }
        used += 1;
        for (lag, acc) in sum.iter_mut().enumerate().take(s.len()) {
            let num: f64 = s
                .iter()
                .zip(&s[lag..])
                .map(|(a, b)| (a - mean) * (b - mean))
                .sum();
            *acc += num / den;
        }
    }
    if used == 0 {
        return Err(Error::Degenerate(alloc::format!(
            "no sequence with non-zero variance among {excluded}"
        )));
    }
    let mut values: Vec<f64> = sum.into_iter().map(|v| v / used as f64).collect();
    values[0] = 1.0;
    Ok(AcfSeries {
        values,
        used,
        excluded,
    })
}

/// L1 distance over lags `1..=max_lag`.
pub fn acf_distance(a: &AcfSeries, b: &AcfSeries, max_lag: usize) -> Result<f64> {
    if a.values.len() <= max_lag || b.values.len() <= max_lag {
        return Err(Error::dim(
            "acf_distance",
            alloc::format!("series through lag {max_lag}"),
            alloc::format!("{} and {} lags", a.values.len() - 1, b.values.len() - 1),
        ));
    }
    Ok((1..=max_lag)
        .map(|l| (a.values[l] - b.values[l]).abs())
        .sum())
}
