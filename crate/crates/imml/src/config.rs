//! The experiment configuration file: data, model, loss, training, and
//! sweep sections, deserialized from TOML or JSON.

use serde::{Deserialize, Serialize};

use crate::losses::LossConfig;
use crate::model::ModelConfig;
use crate::synth::SynthConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelShape {
    pub hidden: usize,
    pub latent: usize,
    pub proj_dim: usize,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            hidden: 64,
            latent: 16,
            proj_dim: 16,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Masking fractions for the heatmap sweep.
    pub mask_grid: Vec<f64>,
    /// Seeds for repeated-run comparisons.
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: SynthConfig,
    pub model: ModelShape,
    pub loss: LossConfig,
    pub train: TrainConfig,
    pub sweep: SweepConfig,
}

impl ExperimentConfig {
    /// The model configuration implied by the data and shape sections.
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            input_dim_p: self.data.dim_p,
            input_dim_a: self.data.dim_a,
            hidden: self.model.hidden,
            latent: self.model.latent,
            proj_dim: self.model.proj_dim,
            classes: self.data.classes,
        }
    }
}
