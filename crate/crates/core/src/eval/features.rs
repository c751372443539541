use alloc::vec::Vec;

use crate::data::SequenceWindow;

/// Summary statistics per channel: mean, standard deviation, minimum,
/// maximum, mean absolute value and zero crossings of the centered signal.
pub const FEATURES_PER_CHANNEL: usize = 6;

const ZERO_EPS: f64 = 1e-12;

/// Flattens a window into `6 × channels` order-free summary features.
pub fn extract_features(window: &SequenceWindow) -> Vec<f64> {
    let mut out = Vec::with_capacity(FEATURES_PER_CHANNEL * window.channels);
    for c in 0..window.channels {
        let x = window.channel(c);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / n;
        let mut crossings = 0usize;
        let mut prev_sign = 0.0;
        for v in &x {
            let centered = v - mean;
            if centered.abs() <= ZERO_EPS {
                continue;
            }
            let sign = centered.signum();
            if prev_sign != 0.0 && sign != prev_sign {
                crossings += 1;
            }
            prev_sign = sign;
        }
        out.extend_from_slice(&[mean, libm::sqrt(var), min, max, mean_abs, crossings as f64]);
    }
    out
}
