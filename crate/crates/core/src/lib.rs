//! Parallel Louvain community detection on dynamic graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the CSR [`Graph`] and [`BatchUpdate`] along with snapshot
//!   mutation.
//! * [`louvain`] is the dynamic-supporting parallel Louvain engine: modularity
//!   metrics, the local-moving and aggregation phases, and the pass driver
//!   parameterised by [`Hooks`].
//! * [`dynamic`] provides the front-ends that decide which vertices a batch
//!   affects (naive-dynamic, delta-screening, dynamic frontier) and the
//!   incremental maintenance of vertex and community weights.
//! * [`batch`] generates random batches and replays temporal edge streams.
//! * [`synth`] builds planted-partition graphs for benchmarks and tests.
//!
//! All parallel work runs on the ambient rayon pool; wrap calls in
//! `ThreadPool::install` to control the worker count.

pub mod atomic;
pub mod batch;
pub mod dynamic;
pub mod error;
pub mod graph;
pub mod louvain;
pub mod synth;

pub use batch::{generate_random_batch, temporal_batches, BatchSpec, TemporalEdge, TemporalReplay};
pub use dynamic::{
    delta_screening, dynamic_frontier, naive_dynamic, static_louvain, update_weights, Approach,
    DynamicResult, DynamicStats,
};
pub use error::{Error, Result};
pub use graph::{apply_batch, BatchUpdate, Graph, GraphBuilder, VertexId, WeightedArc};
pub use louvain::{
    delta_modularity, louvain, modularity, AllAffected, AuxWeights, Communities, Hooks,
    LouvainOutcome, LouvainParams,
};

/// Vertices handed to one worker per scheduling step.
pub const CHUNK_SIZE: usize = 2048;
