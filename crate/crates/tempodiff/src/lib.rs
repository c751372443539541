//! Pipeline, file formats and command line for temporal tabular diffusion.
//!
//! Builds on [`tempodiff_core`] with everything that touches the file
//! system: the run configuration, the dataset cache, checkpoints, synthetic
//! sample files and evaluation reports.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{RunConfig, CONFIG_SCHEMA_VERSION};
pub use dataset::Dataset;
pub use error::{CliError, Result};
