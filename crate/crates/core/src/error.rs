use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigenpair {index} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        index: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix is identically zero")]
    ZeroMatrix,

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("sampling probability {0} is outside (0, 1]")]
    InvalidProbability(f64),

    #[error("eigenvalue {value} at index {index} is repeated")]
    DuplicateEigenvalue { index: usize, value: f64 },

    #[error("perturbation ratio 2|E|/d = {ratio} is not below 1")]
    OutsidePerturbativeRegime { ratio: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("node id {id} on line {line} does not fit the declared graph of {nodes} nodes")]
    NodeIdOverflow { line: usize, id: u64, nodes: usize },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("rank vector has zero variance")]
    ZeroVariance,

    #[error("cannot orthonormalize vector {index} inside a support of size {support}")]
    InfeasibleSupports { index: usize, support: usize },

    #[error("v_n = {v_n} fails the growth checks at n = {n} (ratios {log_ratio}, {quartic_ratio})")]
    InvalidVn {
        n: f64,
        v_n: f64,
        log_ratio: f64,
        quartic_ratio: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("draw {index} failed: {source}")]
    Draw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} draws failed")]
    AllDrawsFailed(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the root cause is an iterative solver running out of iterations.
    pub fn is_no_convergence(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::AllDrawsFailed(_) => true,
            Error::Draw { source, .. } => source.is_no_convergence(),
            _ => false,
        }
    }
}
