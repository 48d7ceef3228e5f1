use thiserror::Error;

use crate::atlas::ChartId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which locus made a map indeterminate at the requested point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum IndeterminacyKind {
    /// The line L = (Y = T = 0).
    LineL,
    /// The line L' = (Z = T = 0).
    LineLPrime,
    /// The line L'' = (X = T = 0).
    LineLDoublePrime,
    /// A chart denominator (A, B or C) vanished.
    Denominator,
    /// The curve C'+ on the exceptional divisor.
    CurveCPrimePlus,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("d must be nonzero")]
    ZeroD,
    #[error("|d| must exceed 1 (got {0})")]
    DNotExpanding(f64),
    #[error("overflow guard tripped at step {step}")]
    Overflow { step: usize },
    #[error("point is indeterminate ({0:?})")]
    Indeterminate(IndeterminacyKind),
    #[error("image leaves chart {0:?}")]
    ChartDomain(ChartId),
    #[error("norm {norm:e} is below the wedge floor {floor:e}")]
    BelowFloor { norm: f64, floor: f64 },
    #[error("premise not satisfied: {0}")]
    Premise(String),
    #[error("symbolic composition exceeds {limit} monomials")]
    TermExplosion { limit: usize },
    #[error("log surrogate lost dominance at step {step}")]
    DominanceLost { step: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
