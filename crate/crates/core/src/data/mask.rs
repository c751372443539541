use alloc::format;
use alloc::vec::Vec;
use rand::Rng as _;

use super::{LabeledWindow, QuantileMap, SequenceWindow};
use crate::{Error, Result, Rng};

/// Observation mask for a window: 0 where the source value is missing, and
/// additionally 0 with probability `missing_rate` for simulated gaps.
pub fn make_mask(window: &LabeledWindow, missing_rate: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::Parameter(format!(
            "missing_rate must be in [0, 1), got {missing_rate}"
        )));
    }
    Ok(window
        .values
        .iter()
        .map(|v| {
            let dropped = missing_rate > 0.0 && rng.random::<f64>() < missing_rate;
            if v.is_nan() || dropped {
                0.0
            } else {
                1.0
            }
        })
        .collect())
}

/// Zero-fills masked-out entries of normalized values.
pub fn apply_mask(x0: &mut [f64], mask: &[f64]) -> Result<()> {
    if x0.len() != mask.len() {
        return Err(Error::dim(
            "apply_mask",
            format!("{}", x0.len()),
            format!("{}", mask.len()),
        ));
    }
    for (x, &m) in x0.iter_mut().zip(mask) {
        if m == 0.0 {
            *x = 0.0;
        }
    }
    Ok(())
}

/// Normalizes windows through `map`, builds masks and zero-fills gaps.
pub fn prepare_windows(
    windows: &[LabeledWindow],
    map: &QuantileMap,
    missing_rate: f64,
    rng: &mut Rng,
) -> Result<Vec<SequenceWindow>> {
    windows
        .iter()
        .map(|w| {
            let mask = make_mask(w, missing_rate, rng)?;
            let mut x0 = map.transform(&w.values)?;
            apply_mask(&mut x0, &mask)?;
            Ok(SequenceWindow {
                len: w.len,
                channels: w.channels,
                x0,
                mask,
                label: w.label,
                user: w.user,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;

    fn window(values: Vec<f64>) -> LabeledWindow {
        LabeledWindow {
            len: values.len(),
            channels: 1,
            values,
            label: 0,
            user: 0,
        }
    }

    #[test]
    fn complete_data_gives_all_ones() {
        let w = window(alloc::vec![1.0; 50]);
        let m = make_mask(&w, 0.0, &mut rng_stream(0, 0)).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn missing_source_values_are_masked() {
        let w = window(alloc::vec![1.0, f64::NAN, 2.0]);
        assert_eq!(
            make_mask(&w, 0.0, &mut rng_stream(0, 0)).unwrap(),
            [1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn rate_bounds() {
        let w = window(alloc::vec![1.0; 3]);
        assert!(make_mask(&w, 1.0, &mut rng_stream(0, 0)).is_err());
        assert!(make_mask(&w, -0.1, &mut rng_stream(0, 0)).is_err());
    }

    #[test]
    fn drop_fraction_concentrates() {
        let w = window(alloc::vec![1.0; 100_000]);
        let m = make_mask(&w, 0.2, &mut rng_stream(1, 0)).unwrap();
        let frac = m.iter().filter(|&&v| v == 0.0).count() as f64 / m.len() as f64;
        assert!((frac - 0.2).abs() < 0.01, "{frac}");
    }

    #[test]
    fn apply_mask_zero_fills() {
        let mut x = [1.0, 2.0, 3.0];
        apply_mask(&mut x, &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(x, [1.0, 0.0, 3.0]);
        assert!(apply_mask(&mut x, &[1.0]).is_err());
    }
}
