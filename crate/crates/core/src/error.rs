use thiserror::Error;

use crate::eig::EigenResult;
use crate::ingest::IngestError;

pub type Result<T, E = FairPcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FairPcError {
    #[error("group `{group}` has {found} columns, expected {expected}")]
    DimensionMismatch {
        group: String,
        expected: usize,
        found: usize,
    },

    #[error("group `{0}` has no rows")]
    EmptyGroup(String),

    #[error("dataset has no groups")]
    NoGroups,

    #[error("feature name count {found} does not match column count {expected}")]
    FeatureNames { expected: usize, found: usize },

    #[error("vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("vector norm is {norm}, expected a unit vector")]
    NotUnit { norm: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigensolver did not converge after {iterations} sweeps")]
    NoConvergence {
        iterations: usize,
        best: Box<EigenResult>,
    },

    #[error("{what} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("{solver} requires exactly {expected} groups, got {found}")]
    GroupCount {
        solver: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid dual weights: {0}")]
    InvalidWeights(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("columns are not orthonormal (max |VᵀV - I| = {0:e})")]
    NotOrthonormal(f64),

    #[error(transparent)]
    Ingest(#[from] IngestError),
}
