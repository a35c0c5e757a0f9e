use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("unsupported graph `{0}`")]
    UnsupportedGraph(String),

    #[error("regularity violation at vertex {vertex}: degree {degree}, expected {expected}")]
    RegularityViolation {
        vertex: usize,
        degree: usize,
        expected: usize,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is not connected")]
    Disconnected,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    InvalidVertex { vertex: usize, n: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("degree mismatch: rate table has s={rates}, graph has s={graph}")]
    DegreeMismatch { rates: usize, graph: usize },

    #[error("resource bound exceeded: {0}")]
    Resource(String),

    #[error("closure fit is degenerate: {0}")]
    FitDegenerate(String),

    #[error("degenerate spectrum: repeated decay rate {0}")]
    DegenerateSpectrum(f64),

    #[error("chain is not ergodic: {0}")]
    NonErgodic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
