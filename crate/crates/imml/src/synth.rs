//! Synthetic imbalanced bimodal classification data.
//!
//! Features are class-conditional unit-variance Gaussians. The class means
//! of the predominant modality are separated proportionally to
//! `predominance`, those of the auxiliary modality to `1 - predominance`,
//! so a single knob controls how much label information each modality
//! carries. Paired samples share their label by construction. The noise
//! ratio adds Gaussian noise to the evaluation splits only, leaving training
//! data clean.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Distance between adjacent class means at full predominance.
const BASE_SEPARATION: f64 = 4.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub dim_p: usize,
    pub dim_a: usize,
    pub classes: usize,
    /// In [0, 1]; above 0.5 the predominant modality carries more label
    /// information than the auxiliary one.
    pub predominance: f64,
    /// Noise scale added to the evaluation splits.
    pub noise_ratio: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_train: 256,
            n_val: 128,
            n_test: 256,
            dim_p: 8,
            dim_a: 8,
            classes: 3,
            predominance: 0.9,
            noise_ratio: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub x_p: Vec<f64>,
    pub x_a: Vec<f64>,
    pub label: usize,
}

impl Sample {
    pub fn one_hot(&self, classes: usize) -> Vec<f64> {
        let mut v = vec![0.0; classes];
        v[self.label] = 1.0;
        v
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    pub classes: usize,
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Orthonormal class directions via Gram-Schmidt on Gaussian draws, so the
/// pairwise mean separation is the same for every class pair.
fn class_directions(rng: &mut ChaCha8Rng, classes: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(dim >= classes, "need dim >= classes for orthogonal class means");
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(classes);
    while dirs.len() < classes {
        let mut v = gaussian_vec(rng, dim);
        for d in &dirs {
            let proj: f64 = v.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
            for (vi, di) in v.iter_mut().zip(d.iter()) {
                *vi -= proj * di;
            }
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        dirs.push(v);
    }
    dirs
}

pub fn generate_synth(cfg: &SynthConfig) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirs_p = class_directions(&mut rng, cfg.classes, cfg.dim_p);
    let dirs_a = class_directions(&mut rng, cfg.classes, cfg.dim_a);
    let sep_p = BASE_SEPARATION * cfg.predominance;
    let sep_a = BASE_SEPARATION * (1.0 - cfg.predominance);

    let mut draw_split = |n: usize| -> Vec<Sample> {
        let mut out: Vec<Sample> = (0..n)
            .map(|i| {
                let label = i % cfg.classes;
                let x_p: Vec<f64> = gaussian_vec(&mut rng, cfg.dim_p)
                    .into_iter()
                    .zip(&dirs_p[label])
                    .map(|(noise, d)| sep_p * d + noise)
                    .collect();
                let x_a: Vec<f64> = gaussian_vec(&mut rng, cfg.dim_a)
                    .into_iter()
                    .zip(&dirs_a[label])
                    .map(|(noise, d)| sep_a * d + noise)
                    .collect();
                Sample { x_p, x_a, label }
            })
            .collect();
        out.shuffle(&mut rng);
        out
    };
    let train = draw_split(cfg.n_train);
    let mut val = draw_split(cfg.n_val);
    let mut test = draw_split(cfg.n_test);

    // Evaluation-time corruption on an independent stream, so the base
    // samples are identical across noise settings of the same seed.
    if cfg.noise_ratio > 0.0 {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6e6f_6973_65u64);
        for s in val.iter_mut().chain(test.iter_mut()) {
            for v in s.x_p.iter_mut().chain(s.x_a.iter_mut()) {
                *v += cfg.noise_ratio * noise_rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    SynthDataset {
        train,
        val,
        test,
        classes: cfg.classes,
    }
}

/// Which modality a probe or masking operation addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modality {
    Predominant,
    Auxiliary,
}

impl Sample {
    pub fn features(&self, m: Modality) -> &[f64] {
        match m {
            Modality::Predominant => &self.x_p,
            Modality::Auxiliary => &self.x_a,
        }
    }
}

/// Full-batch multinomial logistic regression on one modality; returns test
/// accuracy. Used to measure how much label information a modality carries.
pub fn linear_probe_accuracy(
    train: &[Sample],
    test: &[Sample],
    modality: Modality,
    classes: usize,
) -> f64 {
    let dim = train[0].features(modality).len();
    let mut w = vec![0.0f64; classes * (dim + 1)]; // bias folded in
    let lr = 0.5;
    let epochs = 200;
    let n = train.len() as f64;
    let mut grad = vec![0.0f64; classes * (dim + 1)];
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for s in train {
            let x = s.features(modality);
            let mut logits = vec![0.0f64; classes];
            for (k, logit) in logits.iter_mut().enumerate() {
                let row = &w[k * (dim + 1)..(k + 1) * (dim + 1)];
                *logit = row[dim] + row[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let total: f64 = exps.iter().sum();
            for k in 0..classes {
                let p = exps[k] / total - if k == s.label { 1.0 } else { 0.0 };
                let row = &mut grad[k * (dim + 1)..(k + 1) * (dim + 1)];
                for (g, xv) in row[..dim].iter_mut().zip(x) {
                    *g += p * xv;
                }
                row[dim] += p;
            }
        }
        for (wv, g) in w.iter_mut().zip(&grad) {
            *wv -= lr * g / n;
        }
    }
    let correct = test
        .iter()
        .filter(|s| {
            let x = s.features(modality);
            let best = (0..classes)
                .max_by(|&a, &b| {
                    let score = |k: usize| {
                        let row = &w[k * (dim + 1)..(k + 1) * (dim + 1)];
                        row[dim] + row[..dim].iter().zip(x).map(|(u, v)| u * v).sum::<f64>()
                    };
                    score(a).partial_cmp(&score(b)).unwrap()
                })
                .unwrap();
            best == s.label
        })
        .count();
    correct as f64 / test.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = SynthConfig::default();
        let a = generate_synth(&cfg);
        let b = generate_synth(&cfg);
        assert_eq!(a.train[0].x_p, b.train[0].x_p);
        assert_eq!(a.test.len(), cfg.n_test);
    }

    #[test]
    fn paired_samples_share_their_label() {
        // Holds by construction; the test pins the invariant against
        // refactors of the generator.
        let data = generate_synth(&SynthConfig::default());
        for s in data.train.iter().chain(&data.val).chain(&data.test) {
            assert!(s.label < data.classes);
            assert_eq!(s.one_hot(data.classes).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn noise_perturbs_eval_splits_only() {
        let clean = generate_synth(&SynthConfig::default());
        let noisy = generate_synth(&SynthConfig {
            noise_ratio: 2.0,
            ..SynthConfig::default()
        });
        assert_eq!(clean.train[0].x_p, noisy.train[0].x_p);
        assert_ne!(clean.test[0].x_p, noisy.test[0].x_p);
    }

    #[test]
    fn balanced_predominance_gives_matched_probes() {
        let mut diff_sum = 0.0;
        for seed in 0..10u64 {
            let data = generate_synth(&SynthConfig {
                predominance: 0.5,
                seed,
                ..SynthConfig::default()
            });
            let p = linear_probe_accuracy(&data.train, &data.test, Modality::Predominant, data.classes);
            let a = linear_probe_accuracy(&data.train, &data.test, Modality::Auxiliary, data.classes);
            diff_sum += p - a;
        }
        assert!((diff_sum / 10.0).abs() < 0.02, "mean gap {}", diff_sum / 10.0);
    }

    #[test]
    fn skewed_predominance_opens_a_probe_gap() {
        let mut p_sum = 0.0;
        let mut a_sum = 0.0;
        for seed in 0..10u64 {
            let data = generate_synth(&SynthConfig {
                predominance: 0.9,
                seed,
                ..SynthConfig::default()
            });
            p_sum += linear_probe_accuracy(&data.train, &data.test, Modality::Predominant, data.classes);
            a_sum += linear_probe_accuracy(&data.train, &data.test, Modality::Auxiliary, data.classes);
        }
        assert!(
            (p_sum - a_sum) / 10.0 > 0.10,
            "gap {} too small",
            (p_sum - a_sum) / 10.0
        );
    }
}
