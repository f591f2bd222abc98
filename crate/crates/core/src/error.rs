//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManipError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("joint state contains non-finite entries")]
    NonFiniteState,

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("constraint matrix is singular and cannot be inverted in plain mode")]
    SingularConstraint,

    #[error("Gram determinant {0:e} is below the round-off clamp")]
    NumericalDet(f64),

    #[error("demonstration data is degenerate: {0}")]
    DegenerateData(String),

    #[error("no feasible target after {0} consecutive rejections")]
    InfeasibleRegion(usize),

    #[error("reference manipulability has zero variance over the test states")]
    ZeroVariance,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, ManipError>;
