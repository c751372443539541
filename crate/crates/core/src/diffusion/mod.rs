//! Cosine noise schedule, forward noising, the simple noise-prediction
//! objective and ancestral reverse sampling.

mod process;
mod sampler;
mod schedule;

pub use process::{
    p_sample_step, q_sample, q_sample_with_noise, simple_loss, simple_loss_and_grad,
    standard_normal,
};
pub use sampler::{sample_loop, NoisePredictor, SampleOptions};
pub use schedule::NoiseSchedule;
