use alloc::string::String;
use thiserror::Error;

/// Errors produced by the core algorithms.
///
/// Infinite χ² divergence (perturbed mass where the nominal distribution has
/// none) is a dedicated variant rather than a large float so that downstream
/// certificates can never silently propagate ∞.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modality `{modality}` has {rows} rows, expected {expected}")]
    RowCountMismatch {
        modality: String,
        rows: usize,
        expected: usize,
    },
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("non-finite value in {context} at row {row}, column {col}")]
    NonFinite {
        context: String,
        row: usize,
        col: usize,
    },
    #[error("row index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("split is degenerate: {0}")]
    DegenerateSplit(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("correlation {0} outside (-1, 1)")]
    InvalidCorrelation(f64),
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("invalid ambiguity spec: {0}")]
    InvalidAmbiguity(String),
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("chi-square divergence is infinite: q has mass at atom {atom} where p has none")]
    InfiniteDivergence { atom: usize },
    #[error("size mismatch: left has {left}, right has {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("sample count {n} exceeds the exact-assignment cap {cap}; subsample first")]
    CapacityExceeded { n: usize, cap: usize },
    #[error("modality `{modality}` has a constant column; correlation undefined")]
    ConstantColumn { modality: String },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("model expects {expected} modalities, dataset has {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: usize,
        got: usize,
    },
    #[error("normal matrix is rank deficient at ridge=0; supply a positive ridge")]
    RankDeficient,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("empty sample")]
    EmptySample,
    #[error("DRO batch needs at least 2 samples, got {n}")]
    DegenerateBatch { n: usize },
    #[error("training diverged (non-finite parameters) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid bound input: {0}")]
    InvalidBoundInput(String),
    #[error("degenerate two-point construction: delta={delta} not in (0, 1/2)")]
    DegenerateConstruction { delta: f64 },
    #[error("dataset is not simulation-shaped: {0}")]
    SchemaMismatch(String),
}
