//! Dynamic-supporting parallel Louvain.
//!
//! [`louvain`] alternates the local-moving phase and the aggregation phase.
//! Which vertices take part in the first pass is decided by a [`Hooks`]
//! implementation supplied by the dynamic front-ends; from the second pass
//! on every super-vertex is processed.

mod aggregate;
mod local_move;
mod metrics;

use std::borrow::Cow;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

pub use aggregate::{aggregate_graph, lookup_dendrogram, renumber_communities};
pub use local_move::{louvain_move, PendingSet};
pub use metrics::{delta_modularity, modularity, scan_communities};

use crate::atomic::AtomicF64;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use local_move::{local_move, Level};
use metrics::ScratchPool;

/// Community id of every vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Communities(Vec<u32>);

impl Communities {
    pub fn new(membership: Vec<u32>) -> Self {
        Self(membership)
    }

    /// Every vertex in its own community.
    pub fn singletons(n: usize) -> Self {
        Self((0..n as u32).collect())
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct community ids.
    pub fn community_count(&self) -> usize {
        renumber_communities(self).1
    }

    /// True when both assign the same vertices to the same groups, whatever
    /// the labels.
    pub fn is_partition_equivalent(&self, other: &Communities) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut forward = HashMap::new();
        let mut backward = HashMap::new();
        self.0.iter().zip(&other.0).all(|(&a, &b)| {
            *forward.entry(a).or_insert(b) == b && *backward.entry(b).or_insert(a) == a
        })
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() == n {
            Ok(())
        } else {
            Err(Error::LengthMismatch { what: "membership", found: self.len(), expected: n })
        }
    }

    /// Length is `n` and every id is below `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_len(n)?;
        match self.0.iter().find(|&&c| c as usize >= n) {
            Some(&c) => Err(Error::VertexOutOfRange { vertex: c as u64, vertex_count: n }),
            None => Ok(()),
        }
    }
}

impl From<Vec<u32>> for Communities {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for Communities {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

/// Weighted degree `K` of every vertex and total weight `Σ` of every
/// community id.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxWeights {
    pub vertex_weight: Vec<f64>,
    pub community_weight: Vec<f64>,
}

impl AuxWeights {
    /// Recomputes `K` and `Σ` by scanning the graph.
    pub fn from_scratch(g: &Graph, c: &Communities) -> Result<Self> {
        let n = g.vertex_count();
        c.validate(n)?;
        let vertex_weight = vertex_weights(g);
        let community_weight = community_weights(&vertex_weight, c.as_slice(), n);
        Ok(Self { vertex_weight, community_weight })
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.vertex_weight.len() != n {
            return Err(Error::LengthMismatch { what: "vertex weights", found: self.vertex_weight.len(), expected: n });
        }
        if self.community_weight.len() != n {
            return Err(Error::LengthMismatch {
                what: "community weights",
                found: self.community_weight.len(),
                expected: n,
            });
        }
        Ok(())
    }

    /// Largest entry-wise difference, relative to the largest magnitude
    /// present (at least 1).
    pub fn max_relative_difference(&self, other: &AuxWeights) -> f64 {
        if self.vertex_weight.len() != other.vertex_weight.len()
            || self.community_weight.len() != other.community_weight.len()
        {
            return f64::INFINITY;
        }
        let pairs = || {
            self.vertex_weight
                .iter()
                .zip(&other.vertex_weight)
                .chain(self.community_weight.iter().zip(&other.community_weight))
        };
        let scale = pairs().fold(1.0f64, |acc, (a, b)| acc.max(a.abs()).max(b.abs()));
        pairs().fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())) / scale
    }
}

/// Weighted degree of every vertex.
pub fn vertex_weights(g: &Graph) -> Vec<f64> {
    (0..g.vertex_count() as VertexId)
        .into_par_iter()
        .with_min_len(crate::CHUNK_SIZE)
        .map(|i| g.weighted_degree_unchecked(i))
        .collect()
}

/// `Σ[c] = Σ_{i : C[i] = c} K[i]` over `slots` community ids.
pub fn community_weights(vertex_weight: &[f64], membership: &[u32], slots: usize) -> Vec<f64> {
    let mut sigma = vec![0.0; slots];
    for (&k, &c) in vertex_weight.iter().zip(membership) {
        sigma[c as usize] += k;
    }
    sigma
}

/// Tuning constants of the Louvain driver.
#[derive(Clone, Debug, PartialEq)]
pub struct LouvainParams {
    /// Per-iteration gain below which the local-moving phase stops.
    pub tolerance: f64,
    /// Divisor applied to `tolerance` after every pass.
    pub tolerance_drop: f64,
    pub max_iterations: usize,
    pub max_passes: usize,
    /// Stop when `|Γ| / |V'|` after a pass exceeds this ratio.
    pub aggregation_tolerance: f64,
}

impl LouvainParams {
    /// Settings for large static graphs fed with random batches.
    pub fn random_batches() -> Self {
        Self { tolerance: 1e-2, tolerance_drop: 10.0, max_iterations: 20, max_passes: 10, aggregation_tolerance: 0.8 }
    }

    /// Settings for real-world temporal graphs: aggregation tolerance disabled.
    pub fn temporal() -> Self {
        Self { aggregation_tolerance: 1.0, ..Self::random_batches() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.tolerance_drop >= 1.0) {
            return Err(Error::InvalidParams(format!("tolerance drop must be at least 1, got {}", self.tolerance_drop)));
        }
        if !(self.aggregation_tolerance > 0.0 && self.aggregation_tolerance <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "aggregation tolerance must lie in (0, 1], got {}",
                self.aggregation_tolerance
            )));
        }
        Ok(())
    }
}

impl Default for LouvainParams {
    fn default() -> Self {
        Self::random_batches()
    }
}

/// Decides which vertices the first pass of [`louvain`] works on.
///
/// Implementations are shared by all workers. `on_change` may only set
/// flags; it runs whenever a vertex migrates during the first pass.
pub trait Hooks: Sync {
    /// Whether `v` starts out unprocessed.
    fn is_affected(&self, v: VertexId) -> bool;
    /// Whether `v` may be processed when it is (re)marked unprocessed.
    fn in_affected_range(&self, v: VertexId) -> bool;
    fn on_change(&self, _v: VertexId) {}
}

impl<T: Hooks + ?Sized> Hooks for &T {
    fn is_affected(&self, v: VertexId) -> bool {
        (**self).is_affected(v)
    }
    fn in_affected_range(&self, v: VertexId) -> bool {
        (**self).in_affected_range(v)
    }
    fn on_change(&self, v: VertexId) {
        (**self).on_change(v)
    }
}

/// Every vertex is affected: static and naive-dynamic Louvain.
#[derive(Clone, Copy, Debug, Default)]
pub struct AllAffected;

impl Hooks for AllAffected {
    #[inline]
    fn is_affected(&self, _: VertexId) -> bool {
        true
    }
    #[inline]
    fn in_affected_range(&self, _: VertexId) -> bool {
        true
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LouvainOutcome {
    pub communities: Communities,
    /// Local-moving iterations summed over passes.
    pub iterations: usize,
    pub passes: usize,
}

/// State observed after each pass, for instrumentation.
#[derive(Debug)]
pub struct PassReport<'a> {
    pub pass: usize,
    pub iterations: usize,
    /// Top-level membership after this pass's local-moving phase.
    pub communities: &'a Communities,
}

/// Runs Louvain on `g` starting from `c_prev`, with `aux` consistent with
/// both.
pub fn louvain<H: Hooks + ?Sized>(
    g: &Graph,
    c_prev: &Communities,
    aux: &AuxWeights,
    hooks: &H,
    params: &LouvainParams,
) -> Result<LouvainOutcome> {
    run(g, c_prev, aux, hooks, params, None)
}

/// [`louvain`] with a callback invoked after every pass.
pub fn louvain_observed<H: Hooks + ?Sized>(
    g: &Graph,
    c_prev: &Communities,
    aux: &AuxWeights,
    hooks: &H,
    params: &LouvainParams,
    observer: &mut dyn FnMut(&PassReport<'_>),
) -> Result<LouvainOutcome> {
    run(g, c_prev, aux, hooks, params, Some(observer))
}

fn run<H: Hooks + ?Sized>(
    g: &Graph,
    c_prev: &Communities,
    aux: &AuxWeights,
    hooks: &H,
    params: &LouvainParams,
    mut observer: Option<&mut dyn FnMut(&PassReport<'_>)>,
) -> Result<LouvainOutcome> {
    params.validate()?;
    let n = g.vertex_count();
    c_prev.validate(n)?;
    aux.check_len(n)?;

    let mut pending = PendingSet::new(n);
    (0..n as VertexId).into_par_iter().with_min_len(crate::CHUNK_SIZE).for_each(|i| {
        if hooks.is_affected(i) {
            pending.mark(i);
        }
    });

    let scratch = ScratchPool::new(n);
    let mut top: Vec<u32> = (0..n as u32).collect();
    let mut level_graph: Cow<'_, Graph> = Cow::Borrowed(g);
    let mut membership: Vec<AtomicU32> = c_prev.as_slice().iter().map(|&c| AtomicU32::new(c)).collect();
    let mut vertex_weight: Cow<'_, [f64]> = Cow::Borrowed(&aux.vertex_weight);
    let mut community_weight: Vec<AtomicF64> = aux.community_weight.iter().map(|&s| AtomicF64::new(s)).collect();
    let mut tolerance = params.tolerance;
    let (mut iterations, mut passes) = (0, 0);

    for pass in 0..params.max_passes {
        let level = Level { membership: &membership, vertex_weight: &vertex_weight, community_weight: &community_weight };
        let moved = if pass == 0 {
            local_move(&level_graph, &level, hooks, tolerance, params.max_iterations, &mut pending, &scratch)
        } else {
            local_move(&level_graph, &level, &AllAffected, tolerance, params.max_iterations, &mut pending, &scratch)
        };
        iterations += moved;
        passes += 1;

        let current: Vec<u32> = membership.iter().map(|c| c.load(Ordering::Relaxed)).collect();
        if let Some(obs) = observer.as_mut() {
            let flat = Communities::new(top.iter().map(|&t| current[t as usize]).collect());
            obs(&PassReport { pass, iterations: moved, communities: &flat });
        }
        if moved <= 1 {
            break;
        }
        let (renumbered, count) = aggregate::renumber(&current);
        if count as f64 / level_graph.vertex_count() as f64 > params.aggregation_tolerance {
            break;
        }
        for t in top.iter_mut() {
            *t = renumbered[*t as usize];
        }
        let next = aggregate::aggregate(&level_graph, &renumbered, count, &scratch);
        let k = vertex_weights(&next);
        community_weight = k.iter().map(|&s| AtomicF64::new(s)).collect();
        vertex_weight = Cow::Owned(k);
        membership = (0..count as u32).map(AtomicU32::new).collect();
        pending = PendingSet::all(count);
        level_graph = Cow::Owned(next);
        tolerance /= params.tolerance_drop;
    }

    let last: Vec<u32> = membership.into_iter().map(AtomicU32::into_inner).collect();
    let communities = Communities::new(top.into_iter().map(|t| last[t as usize]).collect());
    Ok(LouvainOutcome { communities, iterations, passes })
}
