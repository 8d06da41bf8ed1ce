use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// A single violated constraint on [`ModelParams`](crate::ModelParams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamViolation {
    AlphaNotFinite(f64),
    BetaNotPositive(f64),
    GammaNotPositive(f64),
    HurstOutOfRange(f64),
    /// `H` lies inside the exclusion band around 1/2.
    HurstExcluded(f64),
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AlphaNotFinite(v) => write!(f, "alpha must be finite (got {v})"),
            Self::BetaNotPositive(v) => write!(f, "beta must be positive (got {v})"),
            Self::GammaNotPositive(v) => write!(f, "gamma must be positive (got {v})"),
            Self::HurstOutOfRange(v) => write!(f, "hurst must lie in (0, 1) (got {v})"),
            Self::HurstExcluded(v) => write!(f, "hurst excluded: H = 1/2 is not supported (got {v})"),
        }
    }
}

fn join(violations: &[ParamViolation]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{v}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model parameters: {}", join(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("singular linear system (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("unsupported method: {0}")]
    UnsupportedMethod(&'static str),

    #[error("degenerate bracket increment on cell {cell}")]
    DegenerateCell { cell: usize },

    #[error("degenerate observation: {0}")]
    Degenerate(&'static str),

    #[error("collinear design: denominator {denominator:e} is not strictly negative")]
    Collinear { denominator: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),
}

impl Error {
    /// Errors caused by bad user input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::InvalidArgument(_)
                | Self::InvalidParams(_)
                | Self::GridMismatch(_)
                | Self::UnsupportedMethod(_)
                | Self::Domain(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
