//! The two training objectives: the modality discriminative-knowledge
//! exploration loss (a multimodal InfoNCE variant) and the mixed-pair
//! adjustment loss, plus the combined objective.

use autodiff::Tensor;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::LossError;

/// Hyper-parameters shared by both objectives.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Contrastive temperature.
    pub tau: f64,
    /// Weight of the discriminative-knowledge loss in the combined
    /// objective.
    pub gamma1: f64,
    /// Weight of the mixed-pair adjustment loss.
    pub gamma2: f64,
    /// How many unpaired partners each sample is matched with.
    pub n_unpaired: usize,
    /// Beta-distribution parameters for the mixing coefficient.
    pub beta_a: f64,
    pub beta_b: f64,
    /// Shared dimension of the projected features.
    pub proj_dim: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            tau: 0.5,
            gamma1: 1e-3,
            gamma2: 1e-2,
            n_unpaired: 2,
            beta_a: 0.1,
            beta_b: 0.1,
            proj_dim: 16,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if self.tau <= 0.0 {
            return Err(LossError::InvalidConfig("tau must be positive".into()));
        }
        if self.n_unpaired < 1 {
            return Err(LossError::InvalidConfig("n_unpaired must be at least 1".into()));
        }
        if self.beta_a <= 0.0 || self.beta_b <= 0.0 {
            return Err(LossError::InvalidConfig("beta parameters must be positive".into()));
        }
        if self.proj_dim < 1 {
            return Err(LossError::InvalidConfig("proj_dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// How unpaired features are combined into one representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionKind {
    /// Concatenate the weighted parts; no dimension constraint.
    Concat,
    /// Add the weighted parts; requires equal feature dimensions.
    WeightedSum,
}

/// Where the mixing coefficient comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    /// Drawn per fused pair from Beta(a, b).
    Sampled,
    /// Pinned to a constant, mostly for tests.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionSpec {
    pub kind: FusionKind,
    pub lambda_source: LambdaSource,
}

impl Default for FusionSpec {
    fn default() -> Self {
        FusionSpec {
            kind: FusionKind::Concat,
            lambda_source: LambdaSource::Sampled,
        }
    }
}

/// One fused unpaired sample with its mixed soft label.
#[derive(Clone, Debug)]
pub struct MixedSample {
    pub fused: Tensor,
    pub soft_label: Vec<f64>,
    pub lambda: f64,
}

/// One-based wrap of `x` into `[1, n]`.
///
/// The piecewise "x if x <= n, else x mod n" rule would map multiples of `n`
/// to 0, outside the stated range, so the wrap is `((x - 1) mod n) + 1`.
pub fn mod_index(x: usize, n: usize) -> Result<usize, LossError> {
    if x < 1 || n < 1 {
        return Err(LossError::NonPositiveInput);
    }
    Ok((x - 1) % n + 1)
}

fn check_simplex(v: &[f64]) -> Result<(), LossError> {
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || v.iter().any(|&p| p < -1e-6) {
        return Err(LossError::NonSimplexInput);
    }
    Ok(())
}

/// The discriminative-knowledge exploration loss.
///
/// `projected[m][i]` is the projected feature of sample `i` under modality
/// `m`; all features must share one dimension. Each modality `m` is paired
/// with its cyclic successor, and each sample contributes an InfoNCE term:
/// the positive is the same sample under the successor modality, and the
/// denominator runs over both modalities of the pair for every batch index,
/// excluding only the anchor itself.
pub fn mdke_loss(projected: &[Vec<Tensor>], cfg: &LossConfig) -> Result<Tensor, LossError> {
    cfg.validate()?;
    let modalities = projected.len();
    if modalities < 2 {
        return Err(LossError::TooFewModalities);
    }
    let batch = projected[0].len();
    if batch == 0 {
        return Err(LossError::BatchTooSmall { batch: 0, need: 0 });
    }
    let dim = projected[0][0].shape().to_vec();
    for (m, feats) in projected.iter().enumerate() {
        if feats.len() != batch {
            return Err(LossError::DimensionMismatch(format!(
                "modality {m} has {} samples, expected {batch}",
                feats.len()
            )));
        }
        for f in feats {
            if f.shape() != dim {
                return Err(LossError::DimensionMismatch(format!(
                    "feature shape {:?} differs from {:?}",
                    f.shape(),
                    dim
                )));
            }
        }
    }

    // Unit-normalize once; similarities are then plain inner products.
    let unit: Vec<Vec<Tensor>> = projected
        .iter()
        .map(|feats| feats.iter().map(Tensor::l2_normalize).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let mut total: Option<Tensor> = None;
    for m in 0..modalities {
        let partner = (m + 1) % modalities;
        for i in 0..batch {
            let anchor = &unit[m][i];
            let positive = anchor.dot(&unit[partner][i])?.scale(1.0 / cfg.tau)?;

            let mut terms: Vec<Tensor> = Vec::with_capacity(2 * batch - 1);
            for i2 in 0..batch {
                for &m2 in &[m, partner] {
                    if i2 == i && m2 == m {
                        continue;
                    }
                    terms.push(anchor.dot(&unit[m2][i2])?.scale(1.0 / cfg.tau)?);
                }
            }
            // Log-sum-exp with a detached shift: exact at the maximum and
            // gradient-neutral.
            let shift = terms
                .iter()
                .map(|t| t.value())
                .fold(f64::NEG_INFINITY, f64::max);
            let mut denom: Option<Tensor> = None;
            for t in &terms {
                let e = t.sub(&Tensor::scalar(shift))?.exp()?;
                denom = Some(match denom {
                    None => e,
                    Some(d) => d.add(&e)?,
                });
            }
            let lse = denom
                .expect("at least one denominator term")
                .log()?
                .add(&Tensor::scalar(shift))?;
            let term = lse.sub(&positive)?;
            total = Some(match total {
                None => term,
                Some(t) => t.add(&term)?,
            });
        }
    }
    Ok(total.expect("batch and modalities are non-empty"))
}

/// Combines a predominant feature with one auxiliary feature per remaining
/// modality: the predominant part is weighted by `lambda`, each auxiliary
/// part by `(1 - lambda) / (M - 1)`.
pub fn fuse_unpaired(
    h_pred: &Tensor,
    h_aux: &[&Tensor],
    lambda: f64,
    spec: &FusionSpec,
) -> Result<Tensor, LossError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LossError::LambdaOutOfRange(lambda));
    }
    if h_aux.is_empty() {
        return Err(LossError::TooFewModalities);
    }
    let share = (1.0 - lambda) / h_aux.len() as f64;
    let head = h_pred.scale(lambda)?;
    match spec.kind {
        FusionKind::Concat => {
            let scaled: Vec<Tensor> = h_aux
                .iter()
                .map(|h| h.scale(share))
                .collect::<Result<_, _>>()?;
            let mut parts: Vec<&Tensor> = vec![&head];
            parts.extend(scaled.iter());
            Ok(Tensor::concat(&parts)?)
        }
        FusionKind::WeightedSum => {
            let mut acc = head;
            for h in h_aux {
                if h.shape() != h_pred.shape() {
                    return Err(LossError::DimensionMismatch(format!(
                        "weighted_sum needs equal dims, got {:?} vs {:?}",
                        h.shape(),
                        h_pred.shape()
                    )));
                }
                acc = acc.add(&h.scale(share)?)?;
            }
            Ok(acc)
        }
    }
}

/// Soft label of a fused pair: `lambda` of the predominant label plus the
/// remaining mass split over the auxiliary labels. Stays on the simplex
/// whenever the inputs are on it.
pub fn mixed_label(
    y_pred: &[f64],
    y_aux: &[&[f64]],
    lambda: f64,
) -> Result<Vec<f64>, LossError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LossError::LambdaOutOfRange(lambda));
    }
    if y_aux.is_empty() {
        return Err(LossError::TooFewModalities);
    }
    check_simplex(y_pred)?;
    for y in y_aux {
        if y.len() != y_pred.len() {
            return Err(LossError::DimensionMismatch(format!(
                "label length {} vs {}",
                y.len(),
                y_pred.len()
            )));
        }
        check_simplex(y)?;
    }
    let share = (1.0 - lambda) / y_aux.len() as f64;
    let mut out: Vec<f64> = y_pred.iter().map(|v| v * lambda).collect();
    for y in y_aux {
        for (o, v) in out.iter_mut().zip(y.iter()) {
            *o += share * v;
        }
    }
    Ok(out)
}

/// Builds the fused unpaired samples for one minibatch: sample `i` is
/// matched with the next `n_unpaired` samples cyclically, one mixing
/// coefficient drawn per pair.
pub fn mix_pairs<R: Rng>(
    h_pred: &[Tensor],
    h_aux: &[Vec<Tensor>],
    labels: &[Vec<f64>],
    fusion: &FusionSpec,
    cfg: &LossConfig,
    rng: &mut R,
) -> Result<Vec<MixedSample>, LossError> {
    cfg.validate()?;
    let batch = h_pred.len();
    if batch <= cfg.n_unpaired {
        return Err(LossError::BatchTooSmall {
            batch,
            need: cfg.n_unpaired,
        });
    }
    if h_aux.is_empty() {
        return Err(LossError::TooFewModalities);
    }
    for (m, feats) in h_aux.iter().enumerate() {
        if feats.len() != batch {
            return Err(LossError::DimensionMismatch(format!(
                "auxiliary modality {m} has {} samples, expected {batch}",
                feats.len()
            )));
        }
    }
    if labels.len() != batch {
        return Err(LossError::DimensionMismatch(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    let beta = Beta::new(cfg.beta_a, cfg.beta_b)
        .map_err(|e| LossError::InvalidConfig(format!("beta parameters: {e}")))?;

    let mut out = Vec::with_capacity(batch * cfg.n_unpaired);
    for i in 0..batch {
        for n in 1..=cfg.n_unpaired {
            let j = (i + n) % batch;
            let lambda = match fusion.lambda_source {
                LambdaSource::Sampled => beta.sample(rng),
                LambdaSource::Fixed(v) => v,
            };
            let aux: Vec<&Tensor> = h_aux.iter().map(|feats| &feats[j]).collect();
            let fused = fuse_unpaired(&h_pred[i], &aux, lambda, fusion)?;
            let aux_labels: Vec<&[f64]> = h_aux.iter().map(|_| labels[j].as_slice()).collect();
            let soft_label = mixed_label(&labels[i], &aux_labels, lambda)?;
            out.push(MixedSample {
                fused,
                soft_label,
                lambda,
            });
        }
    }
    Ok(out)
}

/// The mixed-pair adjustment loss: the downstream loss of every fused
/// unpaired sample against its mixed soft label, summed over the batch.
/// Differentiable through the features and the predictor.
pub fn beta_loss<R: Rng>(
    h_pred: &[Tensor],
    h_aux: &[Vec<Tensor>],
    labels: &[Vec<f64>],
    predict: &mut dyn FnMut(&Tensor) -> Result<Tensor, LossError>,
    fusion: &FusionSpec,
    cfg: &LossConfig,
    rng: &mut R,
) -> Result<Tensor, LossError> {
    let mixed = mix_pairs(h_pred, h_aux, labels, fusion, cfg, rng)?;
    let mut total: Option<Tensor> = None;
    for sample in &mixed {
        let logits = predict(&sample.fused)?;
        let term = logits.softmax_xent(&sample.soft_label)?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    Ok(total.expect("mix_pairs yields at least one sample"))
}

/// The combined objective: `gamma1 * mdke + gamma2 * beta + base`.
pub fn imml_loss(
    mdke: &Tensor,
    beta: &Tensor,
    base: &Tensor,
    cfg: &LossConfig,
) -> Result<Tensor, LossError> {
    Ok(mdke
        .scale(cfg.gamma1)?
        .add(&beta.scale(cfg.gamma2)?)?
        .add(base)?)
}
