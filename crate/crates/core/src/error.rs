use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: u64, vertex_count: usize },

    #[error("invalid weight {weight} on ({from}, {to}); weights must be finite and positive")]
    InvalidWeight { from: u32, to: u32, weight: f64 },

    #[error("arc ({from}, {to}) is not present in the graph")]
    MissingArc { from: u32, to: u32 },

    #[error("arc ({from}, {to}) is already present")]
    DuplicateArc { from: u32, to: u32 },

    #[error("deletion of ({from}, {to}) carries weight {given}, graph stores {stored}")]
    WeightMismatch { from: u32, to: u32, given: f32, stored: f32 },

    #[error("batch is not symmetric: ({from}, {to}) has no matching reverse arc")]
    AsymmetricBatch { from: u32, to: u32 },

    #[error("graph is not symmetric: arc ({from}, {to}) has no matching reverse arc")]
    AsymmetricGraph { from: u32, to: u32 },

    #[error("modularity is undefined for a graph with zero total edge weight")]
    ZeroTotalWeight,

    #[error("{what} {index} became negative ({value}) after a weight update")]
    NegativeWeight { what: &'static str, index: usize, value: f64 },

    #[error("{what} has {found} entries, expected {expected}")]
    LengthMismatch { what: &'static str, found: usize, expected: usize },

    #[error("community id {id} is outside the contiguous range [0, {count})")]
    NonContiguousCommunities { id: u32, count: usize },

    #[error("dendrogram lookup: id {id} does not index a level of {len} entries")]
    DendrogramOutOfRange { id: u32, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("batch specification cannot be satisfied: {0}")]
    Capacity(String),
}
