//! Central finite-difference oracle shared by the layer tests.

use alloc::vec::Vec;
use rand::Rng as _;

use super::Tensor3;

pub const STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;

pub fn random_tensor(b: usize, t: usize, d: usize, seed: u64) -> Tensor3 {
    let mut rng = crate::rng_stream(seed, 0);
    let data = (0..b * t * d)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Tensor3::from_vec(b, t, d, data).unwrap()
}

pub fn numeric_grad(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = v[i];
            v[i] = orig + STEP;
            let up = f(&v);
            v[i] = orig - STEP;
            let down = f(&v);
            v[i] = orig;
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

pub fn assert_grads_close(analytic: &[f64], numeric: &[f64]) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        assert!(
            rel_err(a, n) < REL_TOL,
            "grad[{i}]: analytic {a} vs numeric {n}"
        );
    }
}
