//! Paired significance testing for repeated-seed experiment runs.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::HarnessError;

/// Two-sided paired t-test p-value for equal-length accuracy lists.
///
/// Degenerate inputs: if every paired difference is identical, the test
/// statistic is undefined — a zero difference reports p = 1, a nonzero one
/// is flagged as [`HarnessError::DegenerateVariance`].
pub fn significance_test(run_a: &[f64], run_b: &[f64]) -> Result<f64, HarnessError> {
    if run_a.len() != run_b.len() {
        return Err(HarnessError::LengthMismatch(run_a.len(), run_b.len()));
    }
    if run_a.len() < 2 {
        return Err(HarnessError::TooShort);
    }
    let n = run_a.len() as f64;
    let diffs: Vec<f64> = run_a.iter().zip(run_b).map(|(a, b)| a - b).collect();
    if diffs.windows(2).all(|w| w[0] == w[1]) {
        return if diffs[0] == 0.0 {
            Ok(1.0)
        } else {
            Err(HarnessError::DegenerateVariance)
        };
    }
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    let t = mean / (var.sqrt() / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid dof");
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}
