//! Numerical core for temporally-extended tabular diffusion.
//!
//! Everything here is pure computation over in-memory buffers and builds
//! without `std`: the fixed-graph network layers and optimizer ([`nn`]), the
//! noise schedule and reverse sampler ([`diffusion`]), the conditional
//! denoiser with temporal adapters ([`model`]), windowing and normalization
//! ([`data`]) and the fidelity metrics, baselines and downstream classifier
//! ([`eval`]). File formats and the command line live in the `tempodiff`
//! crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod diffusion;
pub mod eval;
pub mod model;
pub mod nn;

mod error;
mod fingerprint;
mod special;

pub use error::{Error, Result};
pub use fingerprint::Fingerprint;
pub use special::{normal_cdf, normal_quantile};

/// The random number generator used throughout the crate.
///
/// ChaCha gives reproducible, platform-independent streams and supports
/// independent sub-streams, which is how per-sequence and per-tree
/// randomness is derived from one master seed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds a generator from `seed` and selects sub-stream `stream`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
