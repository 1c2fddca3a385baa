//! Numerical certification of the generalization-bound machinery: the three
//! exactly checkable proof-step inequalities, the Monte-Carlo decay of the
//! log-expectation estimator, and the assembled bound components on held-out
//! data.
//!
//! The bound's sampling term carries an unspecified constant, so the full
//! inequality is not asserted; what is certified is every step that can be
//! checked exactly on a batch, plus the predicted decay rate of the
//! estimator error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::HarnessError;
use crate::model::Model;
use crate::synth::Sample;

/// Slack tolerance for inequalities that hold exactly on a batch.
pub const STEP_TOL: f64 = 1e-12;

/// One verified inequality: `lhs <= rhs` up to the tolerance, with the
/// worst slack over the batch recorded.
#[derive(Clone, Debug, Serialize)]
pub struct StepCheck {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Smallest `rhs - lhs` over the per-sample (or per-pair) instances.
    pub min_slack: f64,
    pub passed: bool,
}

impl StepCheck {
    fn new(label: &str, lhs: f64, rhs: f64, min_slack: f64) -> StepCheck {
        StepCheck {
            label: label.to_owned(),
            lhs,
            rhs,
            min_slack,
            passed: min_slack >= -STEP_TOL,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-class means of `features`.
pub fn class_means(features: &[Vec<f64>], labels: &[usize], classes: usize) -> Vec<Vec<f64>> {
    let dim = features[0].len();
    let mut sums = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for (f, &y) in features.iter().zip(labels) {
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(f) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in s.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

/// The alignment-term lower bound: for unit anchors `view_a`, positives
/// `view_b`, and class means, checks
/// `-E<a_i, mu_{y_i}> - sqrt(E ||b_i - mu_{y_i}||^2)  <=  -E<a_i, b_i>`.
/// The first inequality is pointwise Cauchy-Schwarz on the unit sphere, the
/// second the root-mean-square bound, so the slack is nonnegative on any
/// batch.
pub fn check_cauchy_schwarz_step(
    view_a: &[Vec<f64>],
    view_b: &[Vec<f64>],
    labels: &[usize],
    means: &[Vec<f64>],
) -> StepCheck {
    let n = view_a.len() as f64;
    let mut align = 0.0;
    let mut anchor_mean = 0.0;
    let mut spread = 0.0;
    for ((a, b), &y) in view_a.iter().zip(view_b).zip(labels) {
        align += dot(a, b);
        anchor_mean += dot(a, &means[y]);
        spread += sq_dist(b, &means[y]);
    }
    let rhs = -align / n;
    let lhs = -anchor_mean / n - (spread / n).sqrt();
    StepCheck::new("alignment-bound", lhs, rhs, rhs - lhs)
}

/// Jensen's inequality for the convex exponential: per class and anchor,
/// `E_{x|y} exp(<a, f(x)>) >= exp(<a, E_{x|y} f(x)>)`.
pub fn check_jensen_step(
    features: &[Vec<f64>],
    labels: &[usize],
    anchors: &[Vec<f64>],
    classes: usize,
) -> StepCheck {
    let means = class_means(features, labels, classes);
    let mut lhs_sum = 0.0;
    let mut rhs_sum = 0.0;
    let mut min_slack = f64::INFINITY;
    let mut pairs = 0usize;
    for anchor in anchors {
        for y in 0..classes {
            let members: Vec<&Vec<f64>> = features
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == y)
                .map(|(f, _)| f)
                .collect();
            if members.is_empty() {
                continue;
            }
            let avg_exp: f64 =
                members.iter().map(|f| dot(anchor, f).exp()).sum::<f64>() / members.len() as f64;
            let exp_avg = dot(anchor, &means[y]).exp();
            lhs_sum += exp_avg;
            rhs_sum += avg_exp;
            min_slack = min_slack.min(avg_exp - exp_avg);
            pairs += 1;
        }
    }
    let p = pairs.max(1) as f64;
    StepCheck::new("exp-jensen", lhs_sum / p, rhs_sum / p, min_slack)
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Cross-entropy of logits against a class index.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

/// Convexity of the cross-entropy in the logits: per sample,
/// `CE(sum_m phi_m l_m, y) <= sum_m phi_m CE(l_m, y)` for fusion weights on
/// the simplex.
pub fn check_convexity_step(
    logits: &[Vec<Vec<f64>>], // [modality][sample][class]
    phi: &[f64],
    labels: &[usize],
) -> StepCheck {
    let samples = labels.len();
    let classes = logits[0][0].len();
    let mut fused_total = 0.0;
    let mut mix_total = 0.0;
    let mut min_slack = f64::INFINITY;
    for i in 0..samples {
        let mut fused = vec![0.0; classes];
        let mut mix = 0.0;
        for (m, weight) in phi.iter().enumerate() {
            for (k, f) in fused.iter_mut().enumerate() {
                *f += weight * logits[m][i][k];
            }
            mix += weight * cross_entropy(&logits[m][i], labels[i]);
        }
        let fused_ce = cross_entropy(&fused, labels[i]);
        fused_total += fused_ce;
        mix_total += mix;
        min_slack = min_slack.min(mix - fused_ce);
    }
    let n = samples.max(1) as f64;
    StepCheck::new("fusion-convexity", fused_total / n, mix_total / n, min_slack)
}

/// Mean absolute error of the R-sample log-expectation estimator
/// `log (1/R) sum_j exp(<a, u_j>)` against the population value, for each
/// requested sample count. Averaged over `reps` resamples per anchor.
pub fn log_expectation_error_curve<R: Rng>(
    anchors: &[Vec<f64>],
    population: &[Vec<f64>],
    sample_counts: &[usize],
    reps: usize,
    rng: &mut R,
) -> Vec<(usize, f64)> {
    let truths: Vec<f64> = anchors
        .iter()
        .map(|a| {
            let mean: f64 = population.iter().map(|u| dot(a, u).exp()).sum::<f64>()
                / population.len() as f64;
            mean.ln()
        })
        .collect();
    sample_counts
        .iter()
        .map(|&r| {
            let mut err = 0.0;
            for (a, truth) in anchors.iter().zip(&truths) {
                for _ in 0..reps {
                    let mean: f64 = (0..r)
                        .map(|_| {
                            let u = &population[rng.random_range(0..population.len())];
                            dot(a, u).exp()
                        })
                        .sum::<f64>()
                        / r as f64;
                    err += (mean.ln() - truth).abs();
                }
            }
            (r, err / (anchors.len() * reps) as f64)
        })
        .collect()
}

/// Least-squares slope of `ln error` against `ln R`.
pub fn loglog_slope(curve: &[(usize, f64)]) -> f64 {
    let n = curve.len() as f64;
    let xs: Vec<f64> = curve.iter().map(|(r, _)| (*r as f64).ln()).collect();
    let ys: Vec<f64> = curve.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Sample counts at which the estimator decay is measured.
pub const EPS_SAMPLE_COUNTS: [usize; 5] = [4, 16, 64, 256, 1024];

/// All bound components evaluated on held-out data.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    /// Mean test cross-entropy of the fused classifier.
    pub gerror_estimate: f64,
    /// Per-modality contrastive term over unit-normalized gated features.
    pub mdke_terms: Vec<f64>,
    /// Per-modality conditional feature spread `sqrt(Var(f | y))`.
    pub variance_terms: Vec<f64>,
    /// `ln(n_neg / K)`.
    pub log_term: f64,
    pub n_neg: usize,
    /// `(R, mean |estimate - truth|)` pairs for the log-expectation
    /// estimator.
    pub eps_samples: Vec<(usize, f64)>,
    /// Log-log slope of the decay curve; the theory predicts -1/2.
    pub eps_loglog_slope: f64,
    pub step_checks: Vec<StepCheck>,
}

impl BoundReport {
    pub fn all_steps_passed(&self) -> bool {
        self.step_checks.iter().all(|s| s.passed)
    }
}

/// Assembles a [`BoundReport`] for `model` on `samples` with contrastive
/// batch size `batch_size`.
pub fn bound_report(
    model: &Model,
    samples: &[Sample],
    classes: usize,
    batch_size: usize,
    seed: u64,
) -> Result<BoundReport, HarnessError> {
    let taped = model.tensors(None)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();

    // Unit-normalized gated features per modality, plus per-modality logits
    // and the fused cross-entropy.
    let mut unit = vec![Vec::with_capacity(samples.len()), Vec::with_capacity(samples.len())];
    let mut logits = vec![Vec::with_capacity(samples.len()), Vec::with_capacity(samples.len())];
    let mut gerror = 0.0;
    for s in samples {
        let (g_p, _) = taped.encode(0, &s.x_p)?;
        let (g_a, _) = taped.encode(1, &s.x_a)?;
        unit[0].push(g_p.l2_normalize()?.data().to_vec());
        unit[1].push(g_a.l2_normalize()?.data().to_vec());
        logits[0].push(taped.classify(&g_p)?.data().to_vec());
        logits[1].push(taped.classify(&g_a)?.data().to_vec());
        let fused = taped.classify(&taped.fuse(&[&g_p, &g_a])?)?;
        gerror += cross_entropy(fused.data(), s.label);
    }
    gerror /= samples.len().max(1) as f64;

    let n_star = batch_size.min(samples.len()).max(2);
    let n_neg = 2 * (n_star - 1);

    // Contrastive term per modality, batched like training: the positive is
    // the paired feature under the other modality, negatives are every other
    // sample's features under both.
    let mut mdke_terms = Vec::with_capacity(2);
    for m in 0..2 {
        let partner = 1 - m;
        let mut total = 0.0;
        let mut count = 0usize;
        for chunk_start in (0..samples.len()).step_by(n_star) {
            let end = (chunk_start + n_star).min(samples.len());
            if end - chunk_start < 2 {
                continue;
            }
            for i in chunk_start..end {
                let anchor = &unit[m][i];
                let term1 = -dot(anchor, &unit[partner][i]);
                let negs: Vec<f64> = (chunk_start..end)
                    .filter(|&j| j != i)
                    .flat_map(|j| [dot(anchor, &unit[m][j]), dot(anchor, &unit[partner][j])])
                    .collect();
                total += term1 + log_sum_exp(&negs);
                count += 1;
            }
        }
        mdke_terms.push(total / count.max(1) as f64);
    }

    let mut variance_terms = Vec::with_capacity(2);
    for m in 0..2 {
        let means = class_means(&unit[m], &labels, classes);
        let spread: f64 = unit[m]
            .iter()
            .zip(&labels)
            .map(|(f, &y)| sq_dist(f, &means[y]))
            .sum::<f64>()
            / samples.len().max(1) as f64;
        variance_terms.push(spread.sqrt());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors: Vec<Vec<f64>> = unit[0].iter().take(8).cloned().collect();
    let eps_samples =
        log_expectation_error_curve(&anchors, &unit[0], &EPS_SAMPLE_COUNTS, 64, &mut rng);
    let eps_loglog_slope = loglog_slope(&eps_samples);

    let take = samples.len().min(n_star.max(16));
    let means0 = class_means(&unit[0], &labels, classes);
    let phi = taped.fusion_weights()?.data().to_vec();
    let step_checks = vec![
        check_cauchy_schwarz_step(&unit[0][..take], &unit[1][..take], &labels[..take], &means0),
        check_jensen_step(&unit[0], &labels, &anchors, classes),
        check_convexity_step(&logits, &phi, &labels),
    ];

    Ok(BoundReport {
        gerror_estimate: gerror,
        mdke_terms,
        variance_terms,
        log_term: (n_neg as f64 / classes as f64).ln(),
        n_neg,
        eps_samples,
        eps_loglog_slope,
        step_checks,
    })
}
