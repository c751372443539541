use alloc::format;
use alloc::vec::Vec;

use crate::{normal_cdf, normal_quantile, Error, Fingerprint, Result};

/// Bounds applied to CDF values before the normal inverse.
pub const CDF_CLIP: f64 = 1e-7;

/// Per-channel empirical-CDF map onto a standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileMap {
    references: Vec<Vec<f64>>,
}

fn level(i: usize, n: usize) -> f64 {
    i as f64 / (n - 1) as f64
}

/// Linear-interpolation quantile at `p` of sorted `xs`.
fn sorted_quantile(xs: &[f64], p: f64) -> f64 {
    let pos = p * (xs.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
}

impl QuantileMap {
    /// Fits reference quantiles on row-major `[n × channels]` data; NaN
    /// entries are ignored.
    pub fn fit(values: &[f64], channels: usize, n_quantiles: usize) -> Result<Self> {
        if channels == 0 || values.len() % channels != 0 {
            return Err(Error::dim(
                "quantile_fit",
                format!("a multiple of {channels} values"),
                format!("{}", values.len()),
            ));
        }
        if n_quantiles < 2 {
            return Err(Error::Parameter(format!(
                "n_quantiles must be >= 2, got {n_quantiles}"
            )));
        }
        let mut references = Vec::with_capacity(channels);
        for c in 0..channels {
            let mut col: Vec<f64> = values
                .iter()
                .skip(c)
                .step_by(channels)
                .copied()
                .filter(|v| !v.is_nan())
                .collect();
            col.sort_by(f64::total_cmp);
            if col.iter().any(|v| v.is_infinite()) {
                return Err(Error::NonFinite("quantile_fit"));
            }
            if col.len() < 2 || col[0] == col[col.len() - 1] {
                return Err(Error::Degenerate(format!(
                    "channel {c} has fewer than 2 distinct values"
                )));
            }
            let n_q = n_quantiles.min(col.len());
            references.push(
                (0..n_q)
                    .map(|i| sorted_quantile(&col, level(i, n_q)))
                    .collect(),
            );
        }
        Ok(QuantileMap { references })
    }

    /// Rebuilds a map from stored reference arrays.
    pub fn from_references(references: Vec<Vec<f64>>) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::Format("quantile map has no channels".into()));
        }
        for (c, r) in references.iter().enumerate() {
            if r.len() < 2 || r.iter().any(|v| !v.is_finite()) || r.windows(2).any(|w| w[1] < w[0])
            {
                return Err(Error::Format(format!(
                    "channel {c} references must be >= 2 finite non-decreasing values"
                )));
            }
            if r[0] == r[r.len() - 1] {
                return Err(Error::Degenerate(format!(
                    "channel {c} references are constant"
                )));
            }
        }
        Ok(QuantileMap { references })
    }

    pub fn channels(&self) -> usize {
        self.references.len()
    }

    pub fn references(&self) -> &[Vec<f64>] {
        &self.references
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::new();
        h.write_u64(self.references.len() as u64);
        for r in &self.references {
            h.write_u64(r.len() as u64);
            for &v in r {
                h.write_f64(v);
            }
        }
        h.finish()
    }

    /// Empirical CDF of `x` on channel `c`, averaging over plateaus of
    /// repeated reference values.
    pub fn cdf(&self, c: usize, x: f64) -> f64 {
        let q = &self.references[c];
        let n = q.len();
        if x < q[0] {
            return 0.0;
        }
        if x > q[n - 1] {
            return 1.0;
        }
        let lo = q.partition_point(|&v| v < x);
        let hi = q.partition_point(|&v| v <= x);
        if hi > lo {
            0.5 * (level(lo, n) + level(hi - 1, n))
        } else {
            let (a, b) = (lo - 1, lo);
            level(a, n) + (x - q[a]) / (q[b] - q[a]) * (level(b, n) - level(a, n))
        }
    }

    fn check(&self, op: &'static str, values: &[f64]) -> Result<()> {
        if values.len() % self.channels() != 0 {
            return Err(Error::dim(
                op,
                format!("a multiple of {} values", self.channels()),
                format!("{}", values.len()),
            ));
        }
        Ok(())
    }

    /// Maps row-major raw values to normal scores; NaN stays NaN.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check("quantile_transform", values)?;
        let ch = self.channels();
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if x.is_nan() {
                    x
                } else {
                    normal_quantile(self.cdf(i % ch, x).clamp(CDF_CLIP, 1.0 - CDF_CLIP))
                }
            })
            .collect())
    }

    /// Maps normal scores back to original units.
    pub fn inverse(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check("quantile_inverse", values)?;
        let ch = self.channels();
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                if z.is_nan() {
                    z
                } else {
                    self.inverse_one(i % ch, z)
                }
            })
            .collect())
    }

    fn inverse_one(&self, c: usize, z: f64) -> f64 {
        let q = &self.references[c];
        let n = q.len();
        let p = normal_cdf(z);
        let eps = 1e-12;
        if p <= CDF_CLIP + eps {
            return q[0];
        }
        if p >= 1.0 - CDF_CLIP - eps {
            return q[n - 1];
        }
        let pos = p * (n - 1) as f64;
        let a = (libm::floor(pos) as usize).min(n - 2);
        q[a] + (pos - a as f64) * (q[a + 1] - q[a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::{Distribution, Exp};

    fn exp_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_stream(seed, 0);
        let d = Exp::new(0.5).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn median_maps_to_zero() {
        let xs = exp_sample(501, 1);
        let map = QuantileMap::fit(&xs, 1, 1000).unwrap();
        let mut s = xs.clone();
        s.sort_by(f64::total_cmp);
        let z = map.transform(&[s[250]]).unwrap()[0];
        assert!(z.abs() < 1e-9, "{z}");
    }

    #[test]
    fn round_trip_on_training_values() {
        let xs = exp_sample(5000, 2);
        let map = QuantileMap::fit(&xs, 1, 1000).unwrap();
        let mut rng = rng_stream(3, 0);
        let probe: Vec<f64> = (0..1000)
            .map(|_| xs[rng.random_range(0..xs.len())])
            .collect();
        let back = map.inverse(&map.transform(&probe).unwrap()).unwrap();
        for (a, b) in probe.iter().zip(&back) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn out_of_range_values_clip() {
        let xs = exp_sample(1000, 4);
        let map = QuantileMap::fit(&xs, 1, 1000).unwrap();
        let z = map.transform(&[1e9, -1e9]).unwrap();
        let top = normal_quantile(1.0 - CDF_CLIP);
        assert!(z[0].is_finite() && z[0] <= top + 1e-12);
        assert!(z[1] >= -top - 1e-12);
        let back = map.inverse(&[50.0, -50.0]).unwrap();
        assert_eq!(back, [map.references()[0][999], map.references()[0][0]]);
    }

    #[test]
    fn large_sample_is_standard_normal() {
        let xs = exp_sample(20_000, 5);
        let map = QuantileMap::fit(&xs, 1, 1000).unwrap();
        let z = map.transform(&xs).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let std = libm::sqrt(z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n);
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((std - 1.0).abs() < 0.05, "{std}");
    }

    #[test]
    fn degenerate_channel_is_rejected() {
        let xs = [1.0, 0.0, 1.0, 2.0, 1.0, 3.0];
        assert!(matches!(
            QuantileMap::fit(&xs, 2, 10),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            QuantileMap::fit(&[1.0], 1, 10),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn plateaus_use_the_middle_level() {
        let map = QuantileMap::from_references(alloc::vec![alloc::vec![0.0, 1.0, 1.0, 1.0, 2.0]])
            .unwrap();
        assert_eq!(map.cdf(0, 1.0), 0.5);
        assert_eq!(map.cdf(0, 0.5), 0.125);
        assert_eq!(map.cdf(0, -1.0), 0.0);
        assert_eq!(map.cdf(0, 3.0), 1.0);
    }

    #[test]
    fn fingerprint_tracks_contents() {
        let a = QuantileMap::fit(&exp_sample(100, 6), 1, 50).unwrap();
        let b = QuantileMap::from_references(a.references().to_vec()).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = QuantileMap::fit(&exp_sample(100, 7), 1, 50).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    proptest! {
        #[test]
        fn references_are_sorted_and_transform_monotone(seed in 0u64..1000, n in 3usize..400) {
            let xs = exp_sample(n, seed);
            let map = QuantileMap::fit(&xs, 1, 100).unwrap();
            prop_assert!(map.references()[0].windows(2).all(|w| w[0] <= w[1]));
            let mut s = xs.clone();
            s.sort_by(f64::total_cmp);
            let z = map.transform(&s).unwrap();
            prop_assert!(z.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
