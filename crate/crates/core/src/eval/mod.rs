//! Temporal and distributional fidelity metrics, the SMOTE baseline,
//! class balancing, a random-forest classifier and report assembly.

mod acf;
mod balance;
mod bigram;
mod features;
mod forest;
mod metrics;
mod report;
mod smote;
mod wasserstein;

pub use acf::{acf, acf_distance, AcfSeries};
pub use balance::{
    balance_plan, balance_with_synthetic, DiffusionGenerator, SmoteGenerator, WindowGenerator,
};
pub use bigram::{bigram_distance, bigram_matrix, BigramMatrix, BinEdges};
pub use features::{extract_features, FEATURES_PER_CHANNEL};
pub use forest::{rf_predict, rf_train, ForestConfig, ForestModel};
pub use metrics::ConfusionMatrix;
pub use report::{
    channel_series, classifier_metrics, evaluate_classifier, temporal_report, time_shuffle,
    windows_from_tensor, ChannelMetrics, ClassMetrics, ClassifierMetrics, EvalReport,
    ShuffleBaseline, TemporalOptions, TemporalReport,
};
pub use smote::{smote_oversample, SmoteSample};
pub use wasserstein::wasserstein1;
