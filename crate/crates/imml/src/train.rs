//! The training loop: per minibatch, gated features and projections for
//! both modalities, the discriminative-knowledge loss, the mixed-pair
//! adjustment loss over cyclically unpaired samples, and the base
//! cross-entropy of the fused classifier, minimized together by plain
//! mini-batch gradient descent. Deterministic under the seed.

use autodiff::{Tape, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::losses::{beta_loss, imml_loss, mdke_loss, FusionKind, FusionSpec, LambdaSource, LossConfig};
use crate::model::Model;
use crate::synth::{Sample, SynthDataset};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
        }
    }
}

/// One row of the metrics log.
#[derive(Clone, Debug, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub total_loss: f64,
    pub mdke: f64,
    pub beta: f64,
    pub base: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

/// A minibatch of paired samples with one-hot labels.
pub struct Batch<'a> {
    pub samples: &'a [Sample],
    pub labels: Vec<Vec<f64>>,
}

impl<'a> Batch<'a> {
    pub fn new(samples: &'a [Sample], classes: usize) -> Self {
        Batch {
            samples,
            labels: samples.iter().map(|s| s.one_hot(classes)).collect(),
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains `model` in place; returns the per-epoch metrics log.
///
/// With both loss weights at zero this is exactly the late-fusion baseline.
pub fn train(
    model: &mut Model,
    data: &SynthDataset,
    tc: &TrainConfig,
    lc: &LossConfig,
    seed: u64,
) -> Result<Vec<EpochMetrics>, HarnessError> {
    lc.validate()?;
    let fusion = FusionSpec {
        kind: FusionKind::WeightedSum,
        lambda_source: LambdaSource::Sampled,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut log = Vec::with_capacity(tc.epochs);
    let min_batch = (lc.n_unpaired + 1).max(2);
    let mut step = 0usize;

    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let mut sums = (0.0, 0.0, 0.0, 0.0); // total, mdke, beta, base
        let mut batches = 0usize;
        let mut correct = 0usize;
        let mut seen = 0usize;

        for chunk in order.chunks(tc.batch_size) {
            if chunk.len() < min_batch {
                continue; // drop a too-small tail batch
            }
            step += 1;
            let samples: Vec<Sample> = chunk.iter().map(|&i| data.train[i].clone()).collect();
            let batch = Batch::new(&samples, data.classes);

            let tape = Tape::new();
            let taped = model.tensors(Some(&tape))?;
            let mut gated_p = Vec::with_capacity(samples.len());
            let mut gated_a = Vec::with_capacity(samples.len());
            let mut proj_p = Vec::with_capacity(samples.len());
            let mut proj_a = Vec::with_capacity(samples.len());
            for s in &samples {
                let (g, p) = taped.encode(0, &s.x_p)?;
                gated_p.push(g);
                proj_p.push(p);
                let (g, p) = taped.encode(1, &s.x_a)?;
                gated_a.push(g);
                proj_a.push(p);
            }

            let mdke = if lc.gamma1 != 0.0 {
                mdke_loss(&[proj_p.clone(), proj_a.clone()], lc)?
            } else {
                Tensor::scalar(0.0)
            };
            let beta = if lc.gamma2 != 0.0 {
                beta_loss(
                    &gated_p,
                    &[gated_a.clone()],
                    &batch.labels,
                    &mut |z| taped.classify(z),
                    &fusion,
                    lc,
                    &mut rng,
                )?
            } else {
                Tensor::scalar(0.0)
            };

            let mut base: Option<Tensor> = None;
            for (i, s) in samples.iter().enumerate() {
                let fused = taped.fuse(&[&gated_p[i], &gated_a[i]])?;
                let logits = taped.classify(&fused)?;
                if argmax(logits.data()) == s.label {
                    correct += 1;
                }
                let term = logits.softmax_xent(&batch.labels[i])?;
                base = Some(match base {
                    None => term,
                    Some(b) => b.add(&term)?,
                });
            }
            seen += samples.len();
            let base = base
                .expect("non-empty batch")
                .scale(1.0 / samples.len() as f64)?;

            let total = imml_loss(&mdke, &beta, &base, lc)?;
            if !total.value().is_finite() {
                return Err(HarnessError::NonFiniteLoss { step });
            }
            sums.0 += total.value();
            sums.1 += mdke.value();
            sums.2 += beta.value();
            sums.3 += base.value();
            batches += 1;

            total.backward()?;
            model.sgd_step(&taped, tc.learning_rate);
        }

        let b = batches.max(1) as f64;
        log.push(EpochMetrics {
            epoch,
            total_loss: sums.0 / b,
            mdke: sums.1 / b,
            beta: sums.2 / b,
            base: sums.3 / b,
            train_acc: if seen > 0 { correct as f64 / seen as f64 } else { 0.0 },
            val_acc: evaluate(model, &data.val, 0.0, 0.0, seed)?,
        });
    }
    Ok(log)
}

/// Test accuracy of a frozen model with a random fraction of each
/// modality's latent feature dimensions zeroed out. One mask per modality is
/// drawn per evaluation from `seed`; `mask_p = mask_a = 0` is plain
/// accuracy.
pub fn evaluate(
    model: &Model,
    samples: &[Sample],
    mask_p: f64,
    mask_a: f64,
    seed: u64,
) -> Result<f64, HarnessError> {
    let taped = model.tensors(None)?;
    let latent = model.cfg.latent;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_mask = |fraction: f64| -> Tensor {
        let zeros = ((fraction * latent as f64).round() as usize).min(latent);
        let mut mask = vec![1.0; latent];
        let chosen = rand::seq::index::sample(&mut rng, latent, zeros);
        for i in chosen {
            mask[i] = 0.0;
        }
        Tensor::vector(mask)
    };
    let masks = [draw_mask(mask_p), draw_mask(mask_a)];

    let mut correct = 0usize;
    for s in samples {
        let (g_p, _) = taped.encode(0, &s.x_p)?;
        let (g_a, _) = taped.encode(1, &s.x_a)?;
        let g_p = g_p.hadamard(&masks[0])?;
        let g_a = g_a.hadamard(&masks[1])?;
        let logits = taped.classify(&taped.fuse(&[&g_p, &g_a])?)?;
        if argmax(logits.data()) == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len().max(1) as f64)
}

/// Serializes a metrics log as CSV with a fixed header; float formatting is
/// the shortest round-trip form, so identical runs produce identical bytes.
pub fn metrics_to_csv(log: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,total_loss,mdke,beta,base,train_acc,val_acc\n");
    for row in log {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.epoch, row.total_loss, row.mdke, row.beta, row.base, row.train_acc, row.val_acc
        ));
    }
    out
}
