use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

use crate::data::SequenceWindow;
use crate::{Error, Result, Rng};

/// A SMOTE window together with the pair and interpolation weight that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteSample {
    pub window: SequenceWindow,
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(windows: &[SequenceWindow], base: usize, k: usize) -> Vec<usize> {
    let mut others: Vec<(f64, usize)> = (0..windows.len())
        .filter(|&j| j != base)
        .map(|j| (squared_distance(&windows[base].x0, &windows[j].x0), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.truncate(k);
    others.into_iter().map(|(_, j)| j).collect()
}

/// Interpolates `n_new` windows between random class members and one of
/// their `k` nearest neighbours (Euclidean over the flattened window).
pub fn smote_oversample(
    windows: &[SequenceWindow],
    k: usize,
    n_new: usize,
    rng: &mut Rng,
) -> Result<Vec<SmoteSample>> {
    if windows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "SMOTE needs at least 2 windows of a class, got {}",
            windows.len()
        )));
    }
    if k == 0 {
        return Err(Error::Parameter("SMOTE needs k >= 1".into()));
    }
    let first = &windows[0];
    if windows
        .iter()
        .any(|w| w.x0.len() != first.x0.len() || w.label != first.label)
    {
        return Err(Error::Parameter(
            "SMOTE input must be same-shaped windows of one class".into(),
        ));
    }
    let k = k.min(windows.len() - 1);
    let mut neighbours: Vec<Option<Vec<usize>>> = vec![None; windows.len()];
    let mut out = Vec::with_capacity(n_new);
    for _ in 0..n_new {
        let base = rng.random_range(0..windows.len());
        let list = neighbours[base].get_or_insert_with(|| nearest(windows, base, k));
        let neighbor = list[rng.random_range(0..list.len())];
        let lambda: f64 = rng.random();
        let (a, b) = (&windows[base], &windows[neighbor]);
        out.push(SmoteSample {
            window: SequenceWindow {
                len: a.len,
                channels: a.channels,
                x0: a
                    .x0
                    .iter()
                    .zip(&b.x0)
                    .map(|(x, y)| x + lambda * (y - x))
                    .collect(),
                mask: vec![1.0; a.x0.len()],
                label: a.label,
                user: a.user,
            },
            base,
            neighbor,
            lambda,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;

    pub(crate) fn window(x0: Vec<f64>) -> SequenceWindow {
        SequenceWindow {
            len: x0.len(),
            channels: 1,
            mask: vec![1.0; x0.len()],
            x0,
            label: 2,
            user: 0,
        }
    }

    #[test]
    fn identical_windows_reproduce_themselves() {
        let ws = vec![window(vec![1.0, 2.0, 3.0]); 2];
        for s in smote_oversample(&ws, 5, 10, &mut rng_stream(0, 0)).unwrap() {
            assert_eq!(s.window.x0, [1.0, 2.0, 3.0]);
            assert_eq!(s.window.label, 2);
        }
    }

    #[test]
    fn neighbours_are_the_nearest() {
        let ws: Vec<_> = [0.0, 1.0, 10.0, 11.0]
            .iter()
            .map(|&v| window(vec![v, v]))
            .collect();
        for s in smote_oversample(&ws, 1, 50, &mut rng_stream(1, 0)).unwrap() {
            assert_eq!(s.neighbor, s.base ^ 1);
        }
    }

    #[test]
    fn samples_lie_on_segments_and_in_the_hull() {
        let mut rng = rng_stream(2, 0);
        let ws: Vec<_> = (0..20)
            .map(|_| window((0..6).map(|_| rng.random_range(-3.0..3.0)).collect()))
            .collect();
        for s in smote_oversample(&ws, 5, 200, &mut rng).unwrap() {
            let (a, b) = (&ws[s.base].x0, &ws[s.neighbor].x0);
            for i in 0..6 {
                let expect = a[i] + s.lambda * (b[i] - a[i]);
                assert!((s.window.x0[i] - expect).abs() < 1e-12);
                let lo = ws.iter().map(|w| w.x0[i]).fold(f64::INFINITY, f64::min);
                let hi = ws.iter().map(|w| w.x0[i]).fold(f64::NEG_INFINITY, f64::max);
                assert!(lo <= s.window.x0[i] && s.window.x0[i] <= hi);
            }
            assert!((0.0..=1.0).contains(&s.lambda));
        }
    }

    #[test]
    fn too_small_class_is_an_error() {
        let ws = vec![window(vec![1.0])];
        assert!(matches!(
            smote_oversample(&ws, 5, 1, &mut rng_stream(0, 0)),
            Err(Error::InsufficientData(_))
        ));
    }
}
