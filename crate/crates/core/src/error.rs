use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} has norm below 1e-12 and cannot be normalized")]
    ZeroVector { row: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid neighbourhood sizes k1={k1}, k2={k2}")]
    BadK { k1: usize, k2: usize },
    #[error("cannot form {k} clusters from {n} samples")]
    TooFewSamples { k: usize, n: usize },
    #[error("empty clusters: {0:?}")]
    EmptyCluster(Vec<usize>),
    #[error("label {label} out of range for {k} proxies")]
    BadLabel { label: i64, k: usize },
    #[error("no batch member has label {label} and camera {camera}")]
    EmptyIntersection { label: usize, camera: usize },
    #[error("no batch member has label {label}")]
    NoMembers { label: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("epoch {epoch}: {found} clusters available, {needed} required per batch")]
    TooFewClusters {
        epoch: usize,
        found: usize,
        needed: usize,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed input at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid model file: {0}")]
    BadModel(String),
    #[error("no query has a valid gallery match")]
    NoValidQuery,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
