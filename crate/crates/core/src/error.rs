use thiserror::Error;

use crate::ball::VertexId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("ball of radius {radius} would exceed the vertex cap of {cap}")]
    ResourceLimit { radius: u32, cap: usize },

    #[error("vertex {vertex} at level {level} lies outside the validity region (levels <= {max_level})")]
    Validity {
        vertex: VertexId,
        level: u32,
        max_level: u32,
    },

    #[error("vertex {0} is not in the ball")]
    UnknownVertex(VertexId),

    #[error("vertex {0} is not certified by the truncation bound")]
    Uncertified(VertexId),

    #[error("geodesic {from} -> {to} cannot be certified inside the ball")]
    UncertifiedPair { from: VertexId, to: VertexId },

    #[error("path step {from} -> {to} is not an edge")]
    NotAdjacent { from: VertexId, to: VertexId },

    #[error("no eligible pair for radius statistic with C = {0}")]
    NoEligiblePair(u32),

    #[error("need at least 3 points with positive survival, got {0}")]
    InsufficientPoints(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("exact search too large: {0}")]
    SearchTooLarge(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the certification/validity family that the experiment
    /// harness counts as a failed replication rather than a hard error.
    pub fn is_certification(&self) -> bool {
        matches!(
            self,
            Error::Uncertified(_) | Error::UncertifiedPair { .. } | Error::Validity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
