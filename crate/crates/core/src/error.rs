use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty graph")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("placement has {got} vertices but the signal graph has {expected}")]
    PlacementSize { expected: usize, got: usize },

    #[error("placement maps two signal vertices onto vertex {0}")]
    PlacementDuplicate(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("candidate pool has {pool} vertices, fewer than the {requested} requested")]
    PoolTooSmall { pool: usize, requested: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("eigensolver did not converge after {restarts} restarts (worst residual {worst_residual:e})")]
    NoConvergence {
        restarts: usize,
        worst_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("degenerate likelihood: signal edge probability makes p_hat = 1")]
    DegenerateLikelihood,

    #[error("{count} subsets exceed the enumeration guard of {limit}")]
    TooManySubsets { count: u128, limit: u128 },

    #[error("dense limit exceeded: {n} > {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("bound hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_trial(self, trial: usize) -> Error {
        Error::Trial {
            trial,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
