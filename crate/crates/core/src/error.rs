use thiserror::Error;

use crate::series::Exponent;

pub type Result<T, E = VoaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VoaError {
    /// The cyclotomic order of the workspace cannot represent `e^{2 pi i q}`.
    #[error("phase e^(2 pi i {q}) needs a cyclotomic order divisible by {needed}, workspace has {order}")]
    DenominatorNotSupported { q: String, needed: i64, order: u32 },

    #[error("empty validity window after operation: lo = {lo}, hi = {hi}")]
    WindowUnderflow { lo: Exponent, hi: Exponent },

    #[error("coefficient at z^{at} requested outside validity window (hi = {hi})")]
    OutsideWindow { at: Exponent, hi: Exponent },

    #[error("log power {power} exceeds bound {bound}")]
    LogBoundExceeded { power: u32, bound: u32 },

    #[error("exponent {0} is not representable with the configured root denominator")]
    ExponentNotRepresentable(Exponent),

    #[error("lattice power x^{0} is not integral")]
    ExponentNotIntegral(Exponent),

    #[error("h fails the conditions L(n)h = delta_(n,0) h, h_n h = delta_(n,1) gamma 1: {0}")]
    HConditionFailed(String),

    #[error("state is not a conformal vector: {0}")]
    NotConformal(String),

    #[error("exponential certificate violated at depth {depth} on input {state}")]
    CertificateViolation { state: String, depth: usize },

    #[error("pseudo-map kind mismatch: {0}")]
    KindMismatch(String),

    #[error("invalid workspace: {0}")]
    Config(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error at {position}: expected {expected}")]
    Parse { position: usize, expected: String },
}
