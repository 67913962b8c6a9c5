use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PfError {
    #[error("order d must be at least 2, got {0}")]
    InvalidOrder(u32),

    #[error("incompatible algebras: d = {left} vs d = {right}")]
    IncompatibleAlgebras { left: u32, right: u32 },

    #[error("strand {strand} lies outside {blocks} block(s); at least {required} block(s) required")]
    StrandOutOfRange {
        strand: u32,
        blocks: usize,
        required: usize,
    },

    #[error("braid generator b{index} needs {required} block(s), truncation has {blocks}")]
    BraidOutOfRange {
        index: u32,
        blocks: usize,
        required: usize,
    },

    #[error("operator dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("element is not homogeneous")]
    NotHomogeneous,

    #[error("functional is not a state: {0}")]
    NotAState(String),

    #[error("inconsistent functional: reconstructed density has eigenvalue {min_eigenvalue:e}")]
    InconsistentFunctional { min_eigenvalue: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("supports overlap: {0}")]
    OverlappingSupports(String),

    #[error("state is not admissible; offending charges {offending:?}")]
    Inadmissible { offending: Vec<u32> },

    #[error("projection collapsed to zero; cannot renormalize")]
    ZeroProjection,

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, PfError>;
