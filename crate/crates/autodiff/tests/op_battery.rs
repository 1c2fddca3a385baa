//! Every differentiable op against central finite differences on random
//! points.

use autodiff::{grad_check_multi, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;
const H: f64 = 1e-5;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    Tensor::vector((0..n).map(|_| rng.random_range(-1.5..1.5)).collect())
}

fn random_positive_vector(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    Tensor::vector((0..n).map(|_| rng.random_range(0.2..2.0)).collect())
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn all_ops_pass_grad_check_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9d);
    for trial in 0..50 {
        let n = 2 + (trial % 4);
        let a = random_vector(&mut rng, n);
        let b = random_vector(&mut rng, n);
        let pos = random_positive_vector(&mut rng, n);
        let m = random_matrix(&mut rng, 3, n);
        let target: Vec<f64> = {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let t: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / t).collect()
        };

        let cases: Vec<(&str, f64)> = vec![
            (
                "add/sub/scale",
                grad_check_multi(
                    |_t, xs| xs[0].add(&xs[1])?.sub(&xs[0].scale(0.25)?)?.sum(),
                    &[a.clone(), b.clone()],
                    H,
                )
                .unwrap(),
            ),
            (
                "hadamard",
                grad_check_multi(|_t, xs| xs[0].hadamard(&xs[1])?.sum(), &[a.clone(), b.clone()], H)
                    .unwrap(),
            ),
            (
                "mul_scalar",
                grad_check_multi(
                    |_t, xs| xs[0].mul_scalar(&xs[1].sum()?)?.sum(),
                    &[a.clone(), b.clone()],
                    H,
                )
                .unwrap(),
            ),
            (
                "matmul",
                grad_check_multi(|_t, xs| xs[1].matmul(&xs[0])?.sum(), &[a.clone(), m.clone()], H)
                    .unwrap(),
            ),
            (
                "dot",
                grad_check_multi(|_t, xs| xs[0].dot(&xs[1]), &[a.clone(), b.clone()], H).unwrap(),
            ),
            (
                "l2_normalize",
                grad_check_multi(
                    |_t, xs| xs[0].l2_normalize()?.hadamard(&xs[1])?.sum(),
                    &[a.clone(), b.clone()],
                    H,
                )
                .unwrap(),
            ),
            (
                "exp/log",
                grad_check_multi(|_t, xs| xs[0].exp()?.sum()?.log(), &[pos.clone()], H).unwrap(),
            ),
            (
                "tanh",
                grad_check_multi(|_t, xs| xs[0].tanh()?.sum(), &[a.clone()], H).unwrap(),
            ),
            (
                "cosine",
                grad_check_multi(|_t, xs| xs[0].cosine(&xs[1]), &[a.clone(), b.clone()], H).unwrap(),
            ),
            (
                "softmax",
                grad_check_multi(
                    |_t, xs| xs[0].softmax()?.hadamard(&xs[1])?.sum(),
                    &[a.clone(), b.clone()],
                    H,
                )
                .unwrap(),
            ),
            (
                "softmax_xent",
                grad_check_multi(|_t, xs| xs[0].softmax_xent(&target), &[a.clone()], H).unwrap(),
            ),
            (
                "concat/at",
                grad_check_multi(
                    |_t, xs| {
                        let cat = Tensor::concat(&[&xs[0], &xs[1]])?;
                        cat.at(0)?.add(&cat.sum()?)
                    },
                    &[a.clone(), b.clone()],
                    H,
                )
                .unwrap(),
            ),
        ];
        for (name, err) in cases {
            assert!(err < TOL, "trial {trial}: {name} relative error {err}");
        }
    }
}
