//! Experiment drivers: synthetic data, engineered hidden positives, the
//! hidden-positive sweep and the embedding × model benchmark.
//!
//! Every repeat derives its own seed from the run seed, and results are
//! assembled in repeat order, so outputs do not depend on thread count.

mod config;
mod engineer;
mod runner;
mod synth;

pub use config::{
    default_embeddings, default_models, train_embeddings, DatasetSpec, EmbeddingMethod, EmbeddingSpec,
    ExperimentConfig, FitInfo, ModelKind, ModelSpec,
};
pub use engineer::{engineer_pu_dataset, seed_dataset, Engineered};
pub use runner::{
    dataset_seed, repeat_seed, run_benchmark, run_hidden_positive_sweep, BenchMetadata, BenchResult, EstimateInfo,
    SubnetworkInfo, SweepRow, SweepTable,
};
pub use synth::{generate_scar_blobs, generate_synthetic, ScarBlobSpec, SyntheticSpec};
