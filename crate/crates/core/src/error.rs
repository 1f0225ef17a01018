use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("point dimension must be at least 1")]
    DimensionZero,
    #[error("non-finite or out-of-range coordinate at point {point}, axis {axis}")]
    NonFiniteCoordinate { point: usize, axis: usize },
    #[error("coordinate buffer of length {len} is not a multiple of dimension {dim}")]
    RaggedBuffer { len: usize, dim: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("cardinality mismatch: {left} vs {right} points")]
    CardinalityMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("embeddings were computed against different references")]
    ReferenceMismatch,

    #[error("SVD did not converge within its iteration budget")]
    ConvergenceFailure,
    #[error("basis is not column-orthonormal (max deviation {deviation:e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("matrix has no non-zero singular value")]
    ZeroMatrix,
    #[error("invalid variance fraction {0}; expected 0 < f <= 1")]
    InvalidVarianceFraction(f64),

    #[error("affine draw stayed singular after {0} attempts")]
    SingularDraw(usize),
    #[error("affine map is singular (|det| = {0:e})")]
    SingularMap(f64),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("class labels are not contiguous: label {0} is missing")]
    LabelGap(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point set needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{path}:{line}: parse error: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}:{line}: expected {expected} columns, found {found}")]
    RaggedRows { path: PathBuf, line: usize, expected: usize, found: usize },
    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),
    #[error("{0}: file not found")]
    MissingFile(PathBuf),
    #[error("unsupported model format version {found:?} (expected {expected:?})")]
    VersionMismatch { found: String, expected: String },
    #[error("model checksum mismatch")]
    ChecksumMismatch,
    #[error("split size {requested} exceeds the {available} training samples of class {class}")]
    InfeasibleSplit { requested: usize, available: usize, class: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Broad failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidConfig(_) | InvalidVarianceFraction(_) | InfeasibleSplit { .. } => ErrorKind::Config,
            ConvergenceFailure | NonOrthonormalBasis { .. } | ZeroMatrix | SingularDraw(_) | SingularMap(_) => {
                ErrorKind::Numeric
            }
            _ => ErrorKind::Data,
        }
    }
}
