//! Random batch generation and temporal-stream replay.
//!
//! Random batches are drawn with ChaCha8 seeded through
//! `SeedableRng::seed_from_u64`, so a `(graph, spec)` pair always yields the
//! same batch.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, Graph, GraphBuilder, VertexId};

/// Name of the generator recorded in batch metadata.
pub const RNG_NAME: &str = "chacha8";

/// Share of a temporal stream loaded as the base graph.
pub const TEMPORAL_BASE_FRACTION: f64 = 0.9;

/// Number of batches replayed after the base graph.
pub const TEMPORAL_BATCH_COUNT: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchSpec {
    /// Batch size as a fraction of the undirected edge count.
    pub size_fraction: f64,
    /// Fraction of the batch that are insertions.
    pub insertion_ratio: f64,
    pub seed: u64,
    pub repetitions: usize,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self { size_fraction: 1e-3, insertion_ratio: 0.8, seed: 0, repetitions: 5 }
    }
}

impl BatchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.size_fraction > 0.0 && self.size_fraction.is_finite()) {
            return Err(Error::InvalidParams(format!("batch size fraction must be positive, got {}", self.size_fraction)));
        }
        if !(0.0..=1.0).contains(&self.insertion_ratio) {
            return Err(Error::InvalidParams(format!("insertion ratio must lie in [0, 1], got {}", self.insertion_ratio)));
        }
        Ok(())
    }

    /// Undirected edges in a batch for a graph with `edges` edges.
    pub fn batch_edges(&self, edges: usize) -> usize {
        ((self.size_fraction * edges as f64).round() as usize).max(1)
    }
}

/// Draws one batch of uniformly chosen edge deletions and absent-pair
/// insertions (weight 1), returned as its symmetric closure.
///
/// The insertion count is `⌊size · ratio⌋` plus one with probability equal
/// to the fractional part, so the expected split matches the ratio exactly.
pub fn generate_random_batch(g: &Graph, spec: &BatchSpec) -> Result<BatchUpdate> {
    spec.validate()?;
    let n = g.vertex_count();
    let existing: Vec<(VertexId, VertexId, f32)> = g.arcs().filter(|&(i, j, _)| i < j).collect();
    let size = spec.batch_edges(g.edge_count());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let exact = size as f64 * spec.insertion_ratio;
    let mut insert_count = exact.floor() as usize;
    if rng.gen_bool((exact - exact.floor()).clamp(0.0, 1.0)) {
        insert_count += 1;
    }
    let insert_count = insert_count.min(size);
    let delete_count = size - insert_count;

    if delete_count > existing.len() {
        return Err(Error::Capacity(format!(
            "cannot delete {delete_count} edges from a graph with {} removable edges",
            existing.len()
        )));
    }
    let pairs = n as u128 * n.saturating_sub(1) as u128 / 2;
    let absent = pairs - existing.len() as u128;
    if insert_count as u128 > absent {
        return Err(Error::Capacity(format!("cannot insert {insert_count} edges: only {absent} vertex pairs are free")));
    }

    let deletions: Vec<_> = index::sample(&mut rng, existing.len(), delete_count).into_iter().map(|k| existing[k]).collect();

    let mut chosen: HashSet<(VertexId, VertexId)> = HashSet::with_capacity(insert_count);
    let mut insertions = Vec::with_capacity(insert_count);
    if absent < 4 * insert_count as u128 {
        // Dense case: enumerate the free pairs instead of rejecting.
        let mut free = Vec::new();
        for i in 0..n as VertexId {
            for j in i + 1..n as VertexId {
                if !g.has_arc(i, j) {
                    free.push((i, j));
                }
            }
        }
        for k in index::sample(&mut rng, free.len(), insert_count) {
            let (i, j) = free[k];
            insertions.push((i, j, 1.0));
        }
    } else {
        while insertions.len() < insert_count {
            let i = rng.gen_range(0..n as VertexId);
            let j = rng.gen_range(0..n as VertexId);
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if g.has_arc(key.0, key.1) || !chosen.insert(key) {
                continue;
            }
            insertions.push((key.0, key.1, 1.0));
        }
    }
    Ok(BatchUpdate::from_undirected(deletions, insertions))
}

/// One timestamped interaction of a temporal stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TemporalEdge {
    pub source: VertexId,
    pub target: VertexId,
    pub timestamp: i64,
}

/// Base graph and insertion batches replayed from a temporal stream.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalReplay {
    pub base: Graph,
    pub batches: Vec<BatchUpdate>,
    /// Temporal edges consumed per batch, before deduplication.
    pub batch_edges: usize,
    /// Undirected edges actually inserted by each batch.
    pub inserted_edges: Vec<usize>,
    /// Batches short of the requested count because the stream ran out.
    pub missing_batches: usize,
    /// Self-loops dropped from the stream.
    pub dropped_loops: usize,
}

impl TemporalReplay {
    /// Batches whose every edge was already present.
    pub fn empty_batches(&self) -> usize {
        self.batches.iter().filter(|b| b.is_empty()).count()
    }
}

/// Loads the first 90% of `stream` (by timestamp, ties in input order) as a
/// unit-weight base graph and cuts the remainder into up to 100 consecutive
/// batches of `max(1, ⌊fraction · |stream|⌋)` temporal edges.
///
/// Edges already in the graph and self-loops are dropped. The vertex count
/// covers every id seen in the whole stream.
pub fn temporal_batches(stream: &[TemporalEdge], batch_fraction: f64) -> Result<TemporalReplay> {
    if stream.is_empty() {
        return Err(Error::InvalidParams("temporal stream is empty".into()));
    }
    if !(batch_fraction > 0.0 && batch_fraction.is_finite()) {
        return Err(Error::InvalidParams(format!("batch fraction must be positive, got {batch_fraction}")));
    }
    let mut ordered = stream.to_vec();
    ordered.sort_by_key(|e| e.timestamp);
    let n = ordered.iter().map(|e| e.source.max(e.target) as usize + 1).max().unwrap_or(0);
    let base_len = (ordered.len() as f64 * TEMPORAL_BASE_FRACTION).floor() as usize;
    let batch_edges = ((batch_fraction * ordered.len() as f64).floor() as usize).max(1);

    let mut dropped_loops = 0;
    let mut present: HashSet<(VertexId, VertexId)> = HashSet::new();
    let mut builder = GraphBuilder::with_capacity(n, base_len);
    for e in &ordered[..base_len] {
        if e.source == e.target {
            dropped_loops += 1;
            continue;
        }
        if present.insert(key(e)) {
            builder.add_edge(e.source, e.target, 1.0)?;
        }
    }

    let tail = &ordered[base_len..];
    let available = (tail.len() / batch_edges).min(TEMPORAL_BATCH_COUNT);
    let mut batches = Vec::with_capacity(available);
    let mut inserted_edges = Vec::with_capacity(available);
    for chunk in tail.chunks_exact(batch_edges).take(available) {
        let mut edges = Vec::new();
        for e in chunk {
            if e.source == e.target {
                dropped_loops += 1;
            } else if present.insert(key(e)) {
                edges.push((e.source, e.target, 1.0));
            }
        }
        inserted_edges.push(edges.len());
        batches.push(BatchUpdate::from_undirected([], edges));
    }
    Ok(TemporalReplay {
        base: builder.build(),
        batches,
        batch_edges,
        inserted_edges,
        missing_batches: TEMPORAL_BATCH_COUNT - available,
        dropped_loops,
    })
}

fn key(e: &TemporalEdge) -> (VertexId, VertexId) {
    (e.source.min(e.target), e.source.max(e.target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::apply_batch;
    use crate::synth::sparse_random_graph;

    fn ring(n: u32) -> Graph {
        let mut b = GraphBuilder::new(n as usize);
        for i in 0..n {
            b.add_edge(i, (i + 1) % n, 1.0).unwrap();
        }
        b.build()
    }

    #[test]
    fn two_edge_half_split() {
        let g = ring(100);
        let spec = BatchSpec { size_fraction: 2.0 / 100.0, insertion_ratio: 0.5, seed: 1, ..BatchSpec::default() };
        let b = generate_random_batch(&g, &spec).unwrap();
        assert_eq!(b.deletions.len(), 2);
        assert_eq!(b.insertions.len(), 2);
        assert_eq!(b.len(), 4);
        b.validate(&g).unwrap();
    }

    #[test]
    fn seeded_batches_repeat() {
        let g = sparse_random_graph(500, 2000, 2);
        let spec = BatchSpec { size_fraction: 0.01, seed: 42, ..BatchSpec::default() };
        assert_eq!(generate_random_batch(&g, &spec).unwrap(), generate_random_batch(&g, &spec).unwrap());
        let other = BatchSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_random_batch(&g, &spec).unwrap(), generate_random_batch(&g, &other).unwrap());
    }

    #[test]
    fn insertion_share_tracks_ratio() {
        let g = sparse_random_graph(2000, 10_000, 3);
        let (mut ins, mut total) = (0usize, 0usize);
        for seed in 0..1000 {
            let spec = BatchSpec { size_fraction: 1e-3, seed, ..BatchSpec::default() };
            let b = generate_random_batch(&g, &spec).unwrap();
            ins += b.insertions.len();
            total += b.len();
        }
        let share = ins as f64 / total as f64;
        assert!((0.78..=0.82).contains(&share), "insertion share {share}");
    }

    #[test]
    fn infeasible_specs_fail() {
        let g = ring(4);
        let deletions = BatchSpec { size_fraction: 2.0, insertion_ratio: 0.0, ..BatchSpec::default() };
        assert!(matches!(generate_random_batch(&g, &deletions), Err(Error::Capacity(_))));
        let insertions = BatchSpec { size_fraction: 1.0, insertion_ratio: 1.0, ..BatchSpec::default() };
        assert!(matches!(generate_random_batch(&g, &insertions), Err(Error::Capacity(_))));
        let bad = BatchSpec { size_fraction: 0.0, ..BatchSpec::default() };
        assert!(matches!(generate_random_batch(&g, &bad), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn dense_graph_fills_remaining_pairs() {
        let g = ring(5);
        let spec = BatchSpec { size_fraction: 1.0, insertion_ratio: 1.0, ..BatchSpec::default() };
        let b = generate_random_batch(&g, &spec).unwrap();
        let full = apply_batch(g, &b).unwrap();
        assert_eq!(full.edge_count(), 10);
    }

    fn stream(pairs: &[(u32, u32)]) -> Vec<TemporalEdge> {
        pairs.iter().enumerate().map(|(t, &(s, d))| TemporalEdge { source: s, target: d, timestamp: t as i64 }).collect()
    }

    #[test]
    fn thousand_edge_stream() {
        let pairs: Vec<(u32, u32)> = (0..1000).map(|k| (k, k + 1)).collect();
        let r = temporal_batches(&stream(&pairs), 1e-3).unwrap();
        assert_eq!(r.base.edge_count(), 900);
        assert_eq!(r.batch_edges, 1);
        assert_eq!(r.batches.len(), 100);
        assert_eq!(r.missing_batches, 0);
        assert_eq!(r.base.vertex_count(), 1001);
        let mut g = r.base.clone();
        for b in &r.batches {
            g = apply_batch(g, b).unwrap();
        }
        assert_eq!(g.edge_count(), 1000);
    }

    #[test]
    fn short_stream_reports_missing_batches() {
        let pairs: Vec<(u32, u32)> = (0..1000).map(|k| (k, k + 1)).collect();
        let r = temporal_batches(&stream(&pairs), 3e-3).unwrap();
        assert_eq!(r.batch_edges, 3);
        assert_eq!(r.batches.len(), 33);
        assert_eq!(r.missing_batches, 67);
    }

    #[test]
    fn duplicate_tail_gives_empty_batches() {
        let mut pairs: Vec<(u32, u32)> = (0..900).map(|k| (k % 30, (k % 30) + 1)).collect();
        pairs.extend((0..100).map(|k| ((k % 30) + 1, k % 30)));
        let r = temporal_batches(&stream(&pairs), 1e-3).unwrap();
        assert_eq!(r.batches.len(), 100);
        assert_eq!(r.empty_batches(), 100);
        assert!(r.inserted_edges.iter().all(|&k| k == 0));
    }

    #[test]
    fn stream_of_fifty_edge_batches() {
        let pairs: Vec<(u32, u32)> = (0..507_000u32).map(|k| (k % 5000, (k * 7 + 1) % 5003)).collect();
        let r = temporal_batches(&stream(&pairs), 1e-4).unwrap();
        assert_eq!(r.batch_edges, 50);
    }

    #[test]
    fn stream_is_ordered_by_timestamp() {
        let s = vec![
            TemporalEdge { source: 0, target: 1, timestamp: 5 },
            TemporalEdge { source: 1, target: 2, timestamp: 1 },
        ];
        let r = temporal_batches(&s, 0.5).unwrap();
        assert!(r.base.has_arc(1, 2) && r.base.edge_count() == 1);
        assert_eq!(r.batches.len(), 1);
        assert_eq!(r.batches[0].insertions[0].key(), (0, 1));
        assert!(temporal_batches(&[], 0.1).is_err());
    }
}
