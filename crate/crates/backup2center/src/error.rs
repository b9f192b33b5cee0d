//! Error types for parsing, tree queries and the solvers.

use thiserror::Error;

/// Errors raised while reading a tree document.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed line `{text}`")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: edge ({u}, {v}) closes a cycle")]
    CycleDetected { line: usize, u: usize, v: usize },
    #[error("tree is disconnected: expected {expected} edges, found {found}")]
    Disconnected { expected: usize, found: usize },
    #[error("line {line}: negative weight for vertex {vertex}")]
    NegativeWeight { line: usize, vertex: usize },
    #[error("line {line}: negative length on edge ({u}, {v})")]
    NegativeLength { line: usize, u: usize, v: usize },
    #[error("line {line}: vertex id {id} out of range (expected dense ids 0..{n})")]
    VertexIdOutOfRange { line: usize, id: usize, n: usize },
    #[error("line {line}: vertex {id} declared twice")]
    DuplicateVertex { line: usize, id: usize },
    #[error("invalid JSON document: {0}")]
    BadJson(String),
    #[error("invalid tree: {0}")]
    Invalid(String),
}

/// Errors raised by tree queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("empty demand set for eccentricity query")]
    EmptyDemand,
    #[error("point references edge {edge} which is not on the tree")]
    PointOffTree { edge: usize },
    #[error("offset out of range on edge {edge}")]
    OffsetOutOfRange { edge: usize },
    #[error("invalid tree structure: {0}")]
    Structure(String),
}

/// Errors raised by the center and backup-center solvers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("point is not on the embedded path")]
    NotOnPath,
    #[error("inverse envelope query below the reachable range")]
    InverseOutOfRange,
    #[error("discard precondition violated: median strictly inside the live interval")]
    DiscardPrecondition,
    #[error("2-center balancing would strictly decrease the radius; input pair was not optimal")]
    UnbalancedInput,
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
