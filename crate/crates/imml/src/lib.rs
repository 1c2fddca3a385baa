//! A miniature differentiable-training laboratory for interventional
//! imbalanced multimodal learning: the discriminative-knowledge contrastive
//! loss and the mixed-pair adjustment loss, synthetic imbalanced bimodal
//! data, a deterministic training loop over a small fused classifier,
//! masking evaluation, paired significance testing, and numerical
//! certification of the generalization-bound machinery.

pub mod bound;
pub mod config;
pub mod error;
pub mod losses;
pub mod model;
pub mod stats;
pub mod synth;
pub mod train;

pub use bound::{bound_report, BoundReport, StepCheck};
pub use config::ExperimentConfig;
pub use error::{HarnessError, LossError};
pub use losses::{
    beta_loss, fuse_unpaired, imml_loss, mdke_loss, mix_pairs, mixed_label, mod_index,
    FusionKind, FusionSpec, LambdaSource, LossConfig, MixedSample,
};
pub use model::{Model, ModelConfig};
pub use stats::significance_test;
pub use synth::{generate_synth, linear_probe_accuracy, Modality, Sample, SynthConfig, SynthDataset};
pub use train::{evaluate, metrics_to_csv, train, EpochMetrics, TrainConfig};
