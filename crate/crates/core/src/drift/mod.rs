//! Rollout-state drift and retention metrics.
//!
//! States are embedded as L2-normalized hashed unigram/bigram counts; two
//! models are compared through the samples of states they visit on a shared
//! prompt set.

mod features;
mod io;
mod metrics;
mod retention;

pub use features::{
    featurize_state, featurize_tokens, fnv1a64, ngrams, Ngram, Provenance, StateSample, DEFAULT_DIM,
};
pub use io::{
    read_states, records_from_jsonl, records_to_jsonl, sample_from_records, write_states, StateRecord,
};
pub use metrics::{
    centroid_distance, centroid_distance_vectors, drift_report, jaccard_distance, jaccard_sets,
    median_bandwidth, mmd_rbf, mmd_rbf_vectors, random_directions, sliced_wasserstein,
    sliced_wasserstein_along, sliced_wasserstein_vectors, wasserstein_1d, Bandwidth, DriftConfig,
    DriftReport,
};
pub use retention::{retention_ratio, retention_stats, RetentionReport, TaskRetention};
