//! Shared inputs for the criterion benchmarks.

use driftbench_core::adaptation::{blind_split, BlindSplit};
use driftbench_core::data_io::{generate_synthetic, SyntheticConfig, FEATURE_DIM};
use driftbench_core::preprocess::normalize_dataset;

/// Normalized synthetic dataset at the real feature width: 6 classes,
/// `per_class` samples each, `n_batches` batches.
pub fn fixture(per_class: usize, n_batches: usize) -> BlindSplit {
    let ds = generate_synthetic(&SyntheticConfig {
        n_classes: 6,
        dim: FEATURE_DIM,
        per_class,
        n_batches,
        drift_step: 0.5,
        seed: 2021,
    })
    .expect("valid synthetic config");
    let (normalized, _) = normalize_dataset(&ds).expect("normalization");
    blind_split(&normalized)
}
