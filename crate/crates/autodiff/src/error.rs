use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutodiffError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("input norm is below 1e-12")]
    DegenerateNorm,
    #[error("non-finite value encountered in {0}")]
    NonFiniteValue(&'static str),
    #[error("operands belong to different tapes")]
    TapeMismatch,
    #[error("backward requires a scalar output on a tape")]
    NotAScalarOutput,
    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    StepOutOfRange(f64),
}
