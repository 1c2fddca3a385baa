//! Minimal dense float64 tensors with reverse-mode differentiation: linear
//! maps, elementwise products, L2 normalization, exp/log, cosine similarity,
//! and softmax cross-entropy with soft targets, plus a finite-difference
//! gradient checker.
//!
//! Scope is deliberately small: float64 only, explicit shapes, no
//! broadcasting, no higher-order derivatives. A [`Tape`] is single-threaded;
//! tensors without gradient tracking are freely shareable.

mod check;
mod error;
mod tensor;

pub use check::{grad_check, grad_check_multi};
pub use error::AutodiffError;
pub use tensor::{Tape, Tensor, NORM_EPSILON};
