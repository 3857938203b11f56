use thiserror::Error;

use crate::embedding::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),

    #[error("vertex {vertex} out of range (graph has {n} vertices)")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("coupling on edge {0}-{1} is zero; omit the edge instead")]
    ZeroCoupling(usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spin value {value} at vertex {vertex} is not -1 or +1")]
    InvalidSpin { vertex: usize, value: i8 },

    #[error("lattice dimensions must be positive (got {rows}x{cols})")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("invalid embedding: {}", join_violations(.0))]
    InvalidEmbedding(Vec<Violation>),

    #[error("not an embedding: no hardware coupler joins the trees of logical edge {0}-{1}")]
    NotAnEmbedding(usize, usize),

    #[error("embedding is not a chain (topological-minor) embedding")]
    NotChainEmbedding,

    #[error("greedy embedding failed after {attempts} attempts")]
    EmbedFailed { attempts: usize },

    #[error("negative slack C_i < 0 at vertices {0:?}; run preprocess_fix first")]
    NegativeSlack(Vec<usize>),

    #[error("bias split for vertex {vertex} sums to {sum}, expected C_i = {expected}")]
    InvalidSplit {
        vertex: usize,
        sum: f64,
        expected: f64,
    },

    #[error("chain strength {value} on hardware edge {u}-{v} must be strictly negative")]
    NonNegativeChainStrength { u: usize, v: usize, value: f64 },

    #[error("non-positive weight {weight} at vertex {vertex}")]
    NonPositiveWeight { vertex: usize, weight: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration refused: {n} spins exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
