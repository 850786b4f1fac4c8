use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("point {0} is not in the graph")]
    NotInGraph(String),

    #[error("empty point set: {0}")]
    EmptySet(String),

    #[error("subspace mismatch: {0}")]
    SubspaceMismatch(String),

    #[error("no path avoiding the removed set between the given endpoints")]
    NoAvoidingPath,

    #[error("theta construction failed: {0}")]
    ThetaConstruction(String),

    #[error("separation precondition violated: {0}")]
    Precondition(String),

    #[error("boundary at radius {radius} is empty; radius is not realized on the distance lattice")]
    EmptyBoundary { radius: String },

    #[error("no geodesic circle found for component (parent node {parent}): {detail}")]
    CircleNotFound { parent: usize, detail: String },

    #[error("construction did not terminate within the level cap {cap}")]
    NonTermination { cap: usize },

    #[error("filling exceeded the split bound {bound}")]
    FillBound { bound: u64 },

    #[error("{0}")]
    Other(String),
}
