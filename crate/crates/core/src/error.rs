use crate::tree::VertexId;
use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("input graph is not a tree")]
    NotATree,
    #[error("edge ({0}, {1}) has zero capacity")]
    ZeroCapacity(VertexId, VertexId),
    #[error("vertex id {0} out of range for n = {1}")]
    BadVertex(usize, usize),
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(VertexId, VertexId),
    #[error("vertex set is empty")]
    EmptySet,
    #[error("vertex set is not connected")]
    Disconnected,
    #[error("no sinks given")]
    NoSinks,
    #[error("sink {0} is not a leaf of the working tree")]
    SinkNotLeaf(VertexId),
    #[error("vertex {0} is not in the hub tree")]
    NotInHubTree(VertexId),
    #[error("committed block contains no sink")]
    NoSinkInBlock,
    #[error("committed block contains more than one sink")]
    TwoSinksInBlock,
    #[error("component root {0} has no witness")]
    MissingWitness(VertexId),
    #[error("instance too large for brute-force enumeration (n = {0}, limit = {1})")]
    TooLarge(usize, usize),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
