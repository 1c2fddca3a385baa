use autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("batch of {batch} is too small, need more than {need}")]
    BatchTooSmall { batch: usize, need: usize },
    #[error("index arguments must be at least 1")]
    NonPositiveInput,
    #[error("label vector is off the probability simplex")]
    NonSimplexInput,
    #[error("mixing coefficient {0} outside [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("at least two modalities are required")]
    TooFewModalities,
    #[error("invalid loss configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("paired runs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two paired observations")]
    TooShort,
    #[error("all paired differences are identical and nonzero")]
    DegenerateVariance,
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}
