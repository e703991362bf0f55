use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("edges contain a directed cycle")]
    CycleDetected,
    #[error("node index {index} out of range for {n} nodes")]
    InvalidIndex { index: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("invalid graph size {0}")]
    InvalidSize(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot remove {requested} edges from a graph with {available}")]
    NotEnoughEdges { requested: usize, available: usize },

    #[error("invalid weight range [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("variance of node {node} must be strictly positive, got {value}")]
    NonPositiveVariance { node: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("models are defined on different graphs")]
    StructureMismatch,
    #[error("node {0} has no parents")]
    NoParents(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("node {node}: need at least {required} samples, have {available}")]
    InsufficientSamples {
        node: usize,
        required: usize,
        available: usize,
    },
    #[error("need at least {required} rows, have {available}")]
    TooFewRows { required: usize, available: usize },
    #[error("estimate is not finite")]
    NonFinite,
    #[error("batch size {k} must exceed the parent count {p}")]
    BatchTooSmall { k: usize, p: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("all {batches} batches were rank deficient")]
    AllBatchesSkipped { batches: usize },
    #[error("Cholesky factorization of the empirical parent covariance failed")]
    CholeskyFailed,
    #[error("node {node}: {source}")]
    Node {
        node: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown estimator `{0}`")]
    UnknownMethod(String),
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid contamination spec: {0}")]
    InvalidSpec(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn at_node(self, node: usize) -> Error {
        match self {
            Error::TooFewRows { required, available } => Error::InsufficientSamples {
                node,
                required,
                available,
            },
            e @ Error::Node { .. } | e @ Error::InsufficientSamples { .. } => e,
            e => Error::Node {
                node,
                source: Box::new(e),
            },
        }
    }

    /// Strips any per-node wrapping.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Node { source, .. } => source.root_cause(),
            e => e,
        }
    }

    /// True for failures that come from floating-point trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root_cause(),
            Error::RankDeficient
                | Error::AllBatchesSkipped { .. }
                | Error::CholeskyFailed
                | Error::NotPositiveDefinite
                | Error::NonFinite
        )
    }
}
