use thiserror::Error;

use crate::integrators::SchemeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("modified norm with a = {a}, b = {b} is not equivalent to the Euclidean norm (b^2 >= a)")]
    NormNotEquivalent { a: f64, b: f64 },

    #[error("{scheme} produced a non-finite state at step {step}")]
    NonFinite { scheme: SchemeId, step: usize },

    #[error("{0} is an overdamped scheme; use step_overdamped")]
    OverdampedScheme(SchemeId),

    #[error("{0} is a kinetic scheme; expected OD-EM or OD-LM")]
    KineticScheme(SchemeId),

    #[error("{0} is not gamma-limit convergent (BBK, SPV and SVV have no consistent overdamped limit)")]
    NotGlc(SchemeId),

    #[error("{0} is not supported here: {1}")]
    UnsupportedScheme(SchemeId, &'static str),

    #[error("SES covariance is indefinite (min eigenvalue {0:e})")]
    IndefiniteCovariance(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("chains merged: zero distance at index {0}")]
    ChainsMerged(usize),

    #[error("matrix product underflowed during renormalisation")]
    ProductUnderflow,

    #[error("IDX file {path}: bad magic number {found:#010x} (expected {expected:#010x})")]
    IdxBadMagic { path: String, expected: u32, found: u32 },

    #[error("IDX file {path}: truncated payload at byte offset {offset}")]
    IdxTruncated { path: String, offset: u64 },

    #[error("IDX image/label count mismatch: {images} images, {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
