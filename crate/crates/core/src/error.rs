use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph JSON: {0}")]
    Json(String),

    #[error("self-loop on node {node} (record {record})")]
    SelfLoop { node: usize, record: usize },

    #[error("duplicate edge {u}-{v} (record {record})")]
    DuplicateEdge { u: usize, v: usize, record: usize },

    #[error("non-positive edge weight {weight} on {u}-{v} (record {record})")]
    NonPositiveWeight {
        u: usize,
        v: usize,
        weight: f64,
        record: usize,
    },

    #[error("node id {node} out of range for graph with {n} nodes")]
    InvalidNode { node: usize, n: usize },

    #[error("node {node} appears more than once in the node set")]
    RepeatedNode { node: usize },

    #[error("empty graph: {0}")]
    EmptyGraph(String),

    #[error("node {0} is isolated; the normalized Laplacian is undefined")]
    IsolatedNode(usize),

    #[error("requested {requested} nodes but the graph has only {available}")]
    Budget { requested: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failed to converge")]
    SolverFailure,

    #[error("spline kernel is singular: eps + lambda_{index} = 0")]
    SplineSingularity { index: usize },

    #[error("spline kernel needs a complex power: eps + lambda_{index} = {base:e} < 0 with non-integer s = {s}")]
    ComplexPower { index: usize, base: f64, s: f64 },

    #[error("spectral coefficient {index} is not finite ({value})")]
    NonFiniteCoefficient { index: usize, value: f64 },

    #[error("kernel is not positive definite (min spectral coefficient {0:e}); pass --clamp-spectrum to floor it")]
    IndefiniteKernel(f64),

    #[error("kernel matrix is not positive definite; consider --jitter or --clamp-spectrum")]
    NotPositiveDefinite,

    #[error("power pivot at node {node} is numerically zero ({value:e})")]
    ZeroPivot { node: usize, value: f64 },

    #[error("node {0} was already selected")]
    AlreadySelected(usize),

    #[error("seed set is empty")]
    EmptySeeds,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pagerank did not converge in {0} iterations")]
    NoConvergence(usize),

    #[error("every grid point failed to produce a finite score")]
    AllGridPointsInvalid,

    #[error("invalid kernel spec {spec:?}: {msg}")]
    KernelSpec { spec: String, msg: String },

    #[error("invalid grid spec {spec:?}: {msg}")]
    GridSpec { spec: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures raised by the numerical pipeline rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure
                | Error::SplineSingularity { .. }
                | Error::ComplexPower { .. }
                | Error::NonFiniteCoefficient { .. }
                | Error::IndefiniteKernel(_)
                | Error::NotPositiveDefinite
                | Error::ZeroPivot { .. }
                | Error::NoConvergence(_)
                | Error::AllGridPointsInvalid
                | Error::IsolatedNode(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
