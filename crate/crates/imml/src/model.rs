//! The bimodal model: per-modality encoders, per-dimension
//! discriminative-knowledge gates, projection heads, learned static fusion
//! weights, and a shared linear classifier.
//!
//! Parameters live in plain float64 vectors. For a training step they are
//! lifted onto a tape as leaves; for inference they are lifted as constants,
//! so both paths share one forward implementation.

use autodiff::{Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::LossError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub input_dim_p: usize,
    pub input_dim_a: usize,
    /// Width of the single hidden layer of each encoder.
    pub hidden: usize,
    /// Encoder output dimension, shared by both modalities so features can
    /// be fused by weighted sum.
    pub latent: usize,
    /// Dimension of the projected contrastive features.
    pub proj_dim: usize,
    pub classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_dim_p: 8,
            input_dim_a: 8,
            hidden: 64,
            latent: 16,
            proj_dim: 16,
            classes: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: Vec<f64>, // row-major [out][in]
    pub b: Vec<f64>,
}

impl Linear {
    fn init(rng: &mut ChaCha8Rng, out: usize, inp: usize) -> Linear {
        let scale = 1.0 / (inp as f64).sqrt();
        Linear {
            w: (0..out * inp)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            b: vec![0.0; out],
        }
    }
}

/// One modality's trainable pieces.
#[derive(Clone, Debug)]
pub struct Branch {
    pub hidden: Linear,
    pub out: Linear,
    /// Per-dimension discriminative-knowledge gate over the latent feature.
    pub dk: Vec<f64>,
    pub proj: Linear,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub cfg: ModelConfig,
    pub branches: Vec<Branch>, // [predominant, auxiliary]
    pub fusion_logits: Vec<f64>,
    pub classifier: Linear,
}

impl Model {
    /// Gaussian initialization scaled by fan-in; gates start at identity and
    /// fusion weights uniform. Deterministic in `seed`.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let branch = |rng: &mut ChaCha8Rng, input: usize| Branch {
            hidden: Linear::init(rng, cfg.hidden, input),
            out: Linear::init(rng, cfg.latent, cfg.hidden),
            dk: vec![1.0; cfg.latent],
            proj: Linear::init(rng, cfg.proj_dim, cfg.latent),
        };
        let branches = vec![branch(&mut rng, cfg.input_dim_p), branch(&mut rng, cfg.input_dim_a)];
        Model {
            cfg: cfg.clone(),
            branches,
            fusion_logits: vec![0.0; 2],
            classifier: Linear::init(&mut rng, cfg.classes, cfg.latent),
        }
    }

    /// Lifts the parameters onto a tape (tracked) or into constants
    /// (inference).
    pub fn tensors(&self, tape: Option<&Tape>) -> Result<TapedModel, LossError> {
        let lift = |shape: &[usize], data: &[f64]| -> Result<Tensor, LossError> {
            Ok(match tape {
                Some(t) => t.leaf(shape, data.to_vec())?,
                None => Tensor::constant(shape, data.to_vec())?,
            })
        };
        let lift_linear = |l: &Linear, out: usize, inp: usize| -> Result<(Tensor, Tensor), LossError> {
            Ok((lift(&[out, inp], &l.w)?, lift(&[out], &l.b)?))
        };
        let c = &self.cfg;
        let mut branches = Vec::with_capacity(self.branches.len());
        for (m, b) in self.branches.iter().enumerate() {
            let input = if m == 0 { c.input_dim_p } else { c.input_dim_a };
            let (w1, b1) = lift_linear(&b.hidden, c.hidden, input)?;
            let (w2, b2) = lift_linear(&b.out, c.latent, c.hidden)?;
            let dk = lift(&[c.latent], &b.dk)?;
            let (pw, pb) = lift_linear(&b.proj, c.proj_dim, c.latent)?;
            branches.push(TapedBranch {
                w1,
                b1,
                w2,
                b2,
                dk,
                proj_w: pw,
                proj_b: pb,
            });
        }
        let (cw, cb) = lift_linear(&self.classifier, c.classes, c.latent)?;
        Ok(TapedModel {
            branches,
            fusion_logits: lift(&[2], &self.fusion_logits)?,
            classifier_w: cw,
            classifier_b: cb,
        })
    }

    fn param_slices(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for b in &mut self.branches {
            out.push(&mut b.hidden.w);
            out.push(&mut b.hidden.b);
            out.push(&mut b.out.w);
            out.push(&mut b.out.b);
            out.push(&mut b.dk);
            out.push(&mut b.proj.w);
            out.push(&mut b.proj.b);
        }
        out.push(&mut self.fusion_logits);
        out.push(&mut self.classifier.w);
        out.push(&mut self.classifier.b);
        out
    }

    /// One plain gradient-descent step from the gradients accumulated on
    /// `taped`'s tape.
    pub fn sgd_step(&mut self, taped: &TapedModel, learning_rate: f64) {
        let grads: Vec<Option<Vec<f64>>> = taped.param_tensors().iter().map(|t| t.grad()).collect();
        for (param, grad) in self.param_slices().into_iter().zip(grads) {
            if let Some(g) = grad {
                for (p, gv) in param.iter_mut().zip(g) {
                    *p -= learning_rate * gv;
                }
            }
        }
    }
}

/// The model's parameters as tensors, ready for forward passes.
pub struct TapedModel {
    pub branches: Vec<TapedBranch>,
    pub fusion_logits: Tensor,
    pub classifier_w: Tensor,
    pub classifier_b: Tensor,
}

pub struct TapedBranch {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub dk: Tensor,
    pub proj_w: Tensor,
    pub proj_b: Tensor,
}

impl TapedModel {
    /// Parameter tensors in the same order as `Model::param_slices`.
    fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        for b in &self.branches {
            out.push(&b.w1);
            out.push(&b.b1);
            out.push(&b.w2);
            out.push(&b.b2);
            out.push(&b.dk);
            out.push(&b.proj_w);
            out.push(&b.proj_b);
        }
        out.push(&self.fusion_logits);
        out.push(&self.classifier_w);
        out.push(&self.classifier_b);
        out
    }

    /// Runs one modality's encoder: a tanh hidden layer into a linear latent
    /// feature, gated per dimension. Returns the gated feature and its
    /// unit-normalized projection.
    pub fn encode(&self, modality: usize, x: &[f64]) -> Result<(Tensor, Tensor), LossError> {
        let b = &self.branches[modality];
        let input = Tensor::vector(x.to_vec());
        let h = b.w1.matmul(&input)?.add(&b.b1)?.tanh()?;
        let latent = b.w2.matmul(&h)?.add(&b.b2)?;
        let gated = latent.hadamard(&b.dk)?;
        let projected = b.proj_w.matmul(&gated)?.add(&b.proj_b)?.l2_normalize()?;
        Ok((gated, projected))
    }

    /// Softmax-parameterized static fusion weights.
    pub fn fusion_weights(&self) -> Result<Tensor, LossError> {
        Ok(self.fusion_logits.softmax()?)
    }

    /// Weighted sum of the gated features under the learned fusion weights.
    pub fn fuse(&self, gated: &[&Tensor]) -> Result<Tensor, LossError> {
        let phi = self.fusion_weights()?;
        let mut acc: Option<Tensor> = None;
        for (m, g) in gated.iter().enumerate() {
            let part = g.mul_scalar(&phi.at(m)?)?;
            acc = Some(match acc {
                None => part,
                Some(a) => a.add(&part)?,
            });
        }
        Ok(acc.expect("at least one modality"))
    }

    /// Class logits of a fused (or single-modality) latent feature.
    pub fn classify(&self, feature: &Tensor) -> Result<Tensor, LossError> {
        Ok(self.classifier_w.matmul(feature)?.add(&self.classifier_b)?)
    }
}
