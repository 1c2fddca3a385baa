//! Central-finite-difference verification of reverse-mode gradients.

use crate::error::AutodiffError;
use crate::tensor::{Tape, Tensor};

/// Floor for the relative-error denominator.
const DENOM_FLOOR: f64 = 1e-8;

/// Compares the reverse-mode gradient of a scalar-valued function against
/// central finite differences at `point`, coordinate by coordinate. Returns
/// the maximum relative error with denominator
/// `max(|analytic|, |numeric|, 1e-8)`.
///
/// `h` must lie in `[1e-7, 1e-3]`.
pub fn grad_check<F>(f: F, point: &Tensor, h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&Tape, &Tensor) -> Result<Tensor, AutodiffError>,
{
    grad_check_multi(|tape, xs| f(tape, &xs[0]), &[point.clone()], h)
}

/// [`grad_check`] over several input tensors at once; every coordinate of
/// every input is perturbed.
pub fn grad_check_multi<F>(f: F, points: &[Tensor], h: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&Tape, &[Tensor]) -> Result<Tensor, AutodiffError>,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(AutodiffError::StepOutOfRange(h));
    }

    // Analytic gradients.
    let tape = Tape::new();
    let leaves: Vec<Tensor> = points
        .iter()
        .map(|p| tape.leaf(p.shape(), p.data().to_vec()))
        .collect::<Result<_, _>>()?;
    let out = f(&tape, &leaves)?;
    if !out.is_scalar() {
        return Err(AutodiffError::NotAScalarOutput);
    }
    if !out.value().is_finite() {
        return Err(AutodiffError::NonFiniteValue("grad_check forward"));
    }
    out.backward()?;
    let analytic: Vec<Vec<f64>> = leaves
        .iter()
        .map(|l| l.grad().expect("leaves are tracked"))
        .collect();

    let eval = |points: &[Tensor]| -> Result<f64, AutodiffError> {
        let tape = Tape::new();
        let leaves: Vec<Tensor> = points
            .iter()
            .map(|p| tape.leaf(p.shape(), p.data().to_vec()))
            .collect::<Result<_, _>>()?;
        let out = f(&tape, &leaves)?;
        if !out.is_scalar() || !out.value().is_finite() {
            return Err(AutodiffError::NonFiniteValue("grad_check probe"));
        }
        Ok(out.value())
    };

    let mut worst = 0.0f64;
    for (which, point) in points.iter().enumerate() {
        for coord in 0..point.len() {
            let mut plus = points.to_vec();
            let mut minus = points.to_vec();
            let mut d = point.data().to_vec();
            d[coord] += h;
            plus[which] = Tensor::constant(point.shape(), d.clone())?;
            d[coord] -= 2.0 * h;
            minus[which] = Tensor::constant(point.shape(), d)?;
            let numeric = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
            let exact = analytic[which][coord];
            if !numeric.is_finite() || !exact.is_finite() {
                return Err(AutodiffError::NonFiniteValue("grad_check gradient"));
            }
            let denom = exact.abs().max(numeric.abs()).max(DENOM_FLOOR);
            worst = worst.max((exact - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_passes_tightly() {
        let err = grad_check(
            |_tape, x| x.dot(x),
            &Tensor::vector(vec![3.0]),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let r = grad_check(|_t, x| x.sum(), &Tensor::vector(vec![1.0]), 1e-2);
        assert_eq!(r.unwrap_err(), AutodiffError::StepOutOfRange(1e-2));
    }

    #[test]
    fn composite_ops_pass() {
        let w = Tensor::matrix(2, 3, vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4]).unwrap();
        let err = grad_check_multi(
            |_tape, xs| {
                let h = xs[1].matmul(&xs[0])?.tanh()?;
                let n = h.l2_normalize()?;
                n.exp()?.sum()?.log()
            },
            &[Tensor::vector(vec![0.4, -1.2, 0.9]), w],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-7, "relative error {err}");
    }

    #[test]
    fn softmax_xent_gradient_matches() {
        let err = grad_check(
            |_tape, z| z.softmax_xent(&[0.2, 0.5, 0.3]),
            &Tensor::vector(vec![0.7, -0.1, 1.3]),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn cosine_gradient_matches() {
        let err = grad_check_multi(
            |_tape, xs| xs[0].cosine(&xs[1]),
            &[
                Tensor::vector(vec![0.9, -0.3, 0.5]),
                Tensor::vector(vec![-0.2, 0.8, 0.1]),
            ],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-7, "relative error {err}");
    }
}
