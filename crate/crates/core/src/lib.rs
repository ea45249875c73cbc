//! Sensor-drift adaptation benchmark for batched gas-sensor classification.
//!
//! Batch 1 is the labeled calibration set; later batches are scored blind.
//! Five strategies are compared: no adaptation, per-batch mean centering,
//! DRCA and LDSP subspace projections, and confidence-gated self-training,
//! all feeding an L2-regularized multinomial logistic regression.

pub mod adaptation;
pub mod classifier;
pub mod config;
pub mod data_io;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod preprocess;
pub mod subspace;

pub use adaptation::{
    blind_split, BlindSplit, LabeledBatch, MethodName, MethodSpec, PredictionSet, SelfTrainConfig,
    UnlabeledBatch,
};
pub use classifier::{ClassifierConfig, LogRegModel};
pub use config::ExperimentConfig;
pub use data_io::{generate_synthetic, load_dataset, Batch, Dataset, Sample, SyntheticConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, EvalReport, ProjectionView, ReportCell};
pub use preprocess::{CenteringOffset, NormalizationParams};
pub use subspace::{DrcaConfig, LdspConfig, LinearProjection, ProjectionKind};
