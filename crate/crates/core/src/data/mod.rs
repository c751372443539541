//! Raw sensor ingestion, windowing, quantile normalization, observation
//! masks, stratified splits and a synthetic toy generator.

mod mask;
mod quantile;
mod raw;
mod segment;
mod split;
mod toy;
mod window;

pub use mask::{apply_mask, make_mask, prepare_windows};
pub use quantile::{QuantileMap, CDF_CLIP};
pub use raw::{parse_raw_line, parse_raw_str, ParsedRecords, RawRecord};
pub use segment::{dominant_label, segment_windows, window_count, SegmentConfig};
pub use split::{stratified_split, DatasetSplit, SplitIndices};
pub use toy::{toy_dataset, ToyConfig};
pub use window::{batch_tensors, LabeledWindow, SequenceWindow};
