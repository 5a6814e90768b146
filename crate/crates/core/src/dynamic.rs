//! Dynamic front-ends: naive-dynamic, delta-screening and dynamic frontier,
//! plus incremental maintenance of `K` and `Σ` across a batch.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, Graph, VertexId, WeightedArc};
use crate::louvain::{
    community_weights, delta_modularity, louvain, AllAffected, AuxWeights, Communities, Hooks, LouvainParams,
};
use crate::CHUNK_SIZE;

/// Per-call measurements.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DynamicStats {
    /// Vertices flagged as affected at any point.
    pub affected_count: usize,
    pub iterations: usize,
    pub passes: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicResult {
    pub communities: Communities,
    pub aux: AuxWeights,
    pub stats: DynamicStats,
}

fn flags(n: usize) -> Vec<AtomicBool> {
    (0..n).map(|_| AtomicBool::new(false)).collect()
}

fn count_set(flags: &[AtomicBool]) -> usize {
    flags.par_iter().with_min_len(CHUNK_SIZE).filter(|f| f.load(Ordering::Relaxed)).count()
}

/// Affected flags `δV`, `δE` and `δC`.
#[derive(Debug)]
pub struct AffectedState {
    pub vertex: Vec<AtomicBool>,
    pub neighbors: Vec<AtomicBool>,
    pub community: Vec<AtomicBool>,
}

impl AffectedState {
    pub fn new(n: usize) -> Self {
        Self { vertex: flags(n), neighbors: flags(n), community: flags(n) }
    }

    /// Vertices whose `δV` flag is set, ascending.
    pub fn affected_vertices(&self) -> Vec<VertexId> {
        set_indices(&self.vertex)
    }

    pub fn affected_count(&self) -> usize {
        count_set(&self.vertex)
    }
}

fn set_indices(flags: &[AtomicBool]) -> Vec<VertexId> {
    flags.iter().enumerate().filter(|(_, f)| f.load(Ordering::Relaxed)).map(|(i, _)| i as VertexId).collect()
}

/// Hooks reading a fixed `δV`: delta-screening.
#[derive(Debug)]
pub struct ScreeningHooks<'a> {
    affected: &'a [AtomicBool],
}

impl<'a> ScreeningHooks<'a> {
    pub fn new(affected: &'a [AtomicBool]) -> Self {
        Self { affected }
    }
}

impl Hooks for ScreeningHooks<'_> {
    #[inline]
    fn is_affected(&self, v: VertexId) -> bool {
        self.affected[v as usize].load(Ordering::Relaxed)
    }
    #[inline]
    fn in_affected_range(&self, v: VertexId) -> bool {
        self.affected[v as usize].load(Ordering::Relaxed)
    }
}

/// Hooks of the dynamic frontier: `δV` grows by the neighbors of every
/// vertex that migrates.
#[derive(Debug)]
pub struct FrontierHooks<'a> {
    graph: &'a Graph,
    affected: Vec<AtomicBool>,
}

impl<'a> FrontierHooks<'a> {
    /// Starts from `initial` on `graph`, the post-batch snapshot.
    pub fn new(graph: &'a Graph, initial: &[VertexId]) -> Result<Self> {
        let n = graph.vertex_count();
        let affected = flags(n);
        for &v in initial {
            crate::graph::check_vertex(v, n)?;
            affected[v as usize].store(true, Ordering::Relaxed);
        }
        Ok(Self { graph, affected })
    }

    /// Every vertex flagged so far, ascending.
    pub fn flagged(&self) -> Vec<VertexId> {
        set_indices(&self.affected)
    }

    pub fn flagged_count(&self) -> usize {
        count_set(&self.affected)
    }
}

impl Hooks for FrontierHooks<'_> {
    #[inline]
    fn is_affected(&self, v: VertexId) -> bool {
        self.affected[v as usize].load(Ordering::Relaxed)
    }
    #[inline]
    fn in_affected_range(&self, _: VertexId) -> bool {
        true
    }
    #[inline]
    fn on_change(&self, v: VertexId) {
        for &j in self.graph.neighbors(v) {
            self.affected[j as usize].store(true, Ordering::Relaxed);
        }
    }
}

/// Applies the batch to `K` and `Σ` (grouped by `c_prev`).
///
/// Each worker owns a contiguous range of vertex ids and of community ids
/// and scans the whole batch, applying only the updates in its ranges.
pub fn update_weights(
    g_new: &Graph,
    b: &BatchUpdate,
    c_prev: &Communities,
    aux_prev: &AuxWeights,
) -> Result<AuxWeights> {
    let n = g_new.vertex_count();
    c_prev.validate(n)?;
    aux_prev.check_len(n)?;
    let membership = c_prev.as_slice();
    for e in b.deletions.iter().chain(&b.insertions) {
        crate::graph::check_vertex(e.source, n)?;
        crate::graph::check_vertex(e.target, n)?;
    }

    let mut k = aux_prev.vertex_weight.clone();
    let mut sigma = aux_prev.community_weight.clone();
    let workers = rayon::current_num_threads().clamp(1, n.max(1));
    let span = n.div_ceil(workers).max(1);

    let apply = |lo: usize, hi: usize, k: &mut [f64], sigma: &mut [f64]| {
        let mut add = |e: &WeightedArc, sign: f64| {
            let i = e.source as usize;
            let w = sign * e.weight as f64;
            if (lo..hi).contains(&i) {
                k[i - lo] += w;
            }
            let c = membership[i] as usize;
            if (lo..hi).contains(&c) {
                sigma[c - lo] += w;
            }
        };
        for e in &b.deletions {
            add(e, -1.0);
        }
        for e in &b.insertions {
            add(e, 1.0);
        }
    };
    k.par_chunks_mut(span).zip(sigma.par_chunks_mut(span)).enumerate().for_each(|(w, (k, sigma))| {
        let lo = w * span;
        apply(lo, lo + k.len(), k, sigma);
    });

    let floor = -1e-9 * g_new.total_weight().max(1.0);
    for (what, values) in [("vertex weight", &mut k), ("community weight", &mut sigma)] {
        for (index, v) in values.iter_mut().enumerate() {
            if *v < floor {
                return Err(Error::NegativeWeight { what, index, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    Ok(AuxWeights { vertex_weight: k, community_weight: sigma })
}

/// Vertices the frontier starts from: endpoints of deletions inside a
/// community and of insertions across communities. Ascending, unique.
pub fn frontier_initial(b: &BatchUpdate, c_prev: &Communities) -> Result<Vec<VertexId>> {
    let n = c_prev.len();
    let affected = flags(n);
    let mark = |e: &WeightedArc, same: bool| -> Result<()> {
        crate::graph::check_vertex(e.source, n)?;
        crate::graph::check_vertex(e.target, n)?;
        if (c_prev[e.source as usize] == c_prev[e.target as usize]) == same {
            affected[e.source as usize].store(true, Ordering::Relaxed);
        }
        Ok(())
    };
    b.deletions.par_iter().try_for_each(|e| mark(e, true))?;
    b.insertions.par_iter().try_for_each(|e| mark(e, false))?;
    Ok(set_indices(&affected))
}

/// Best community for an insertion source given the inserted weights `h`
/// towards other communities: highest gain, then highest weight, then
/// lowest id. `None` when `h` is empty.
fn screening_target(h: &BTreeMap<u32, f64>, k_i: f64, d: u32, sigma: &[f64], m: f64) -> Option<u32> {
    let sigma_d_excl = sigma[d as usize] - k_i;
    let mut best: Option<(f64, f64, u32)> = None;
    for (&c, &w) in h {
        let gain = delta_modularity(w, 0.0, k_i, sigma[c as usize], sigma_d_excl, m);
        let better = match best {
            None => true,
            Some((bg, bw, _)) => gain > bg || (gain == bg && w > bw),
        };
        if better {
            best = Some((gain, w, c));
        }
    }
    best.map(|(_, _, c)| c)
}

/// Computes the delta-screening flags for batch `b` on `g_new`.
///
/// `aux` must already reflect the batch. Deletions inside a community
/// flag the source, its neighbors and the target's community; each
/// insertion source with cross-community insertions flags itself, its
/// neighbors and its best such community. Flagged neighbors and community
/// members are then folded into `δV`.
pub fn screening_affected(
    g_new: &Graph,
    b: &BatchUpdate,
    c_prev: &Communities,
    aux: &AuxWeights,
) -> Result<AffectedState> {
    let n = g_new.vertex_count();
    c_prev.validate(n)?;
    aux.check_len(n)?;
    let state = AffectedState::new(n);
    let membership = c_prev.as_slice();
    let m = g_new.total_weight() / 2.0;

    for e in b.deletions.iter().chain(&b.insertions) {
        crate::graph::check_vertex(e.source, n)?;
        crate::graph::check_vertex(e.target, n)?;
    }
    b.deletions.par_iter().for_each(|e| {
        let (i, j) = (e.source as usize, e.target as usize);
        if membership[i] == membership[j] {
            state.vertex[i].store(true, Ordering::Relaxed);
            state.neighbors[i].store(true, Ordering::Relaxed);
            state.community[membership[j] as usize].store(true, Ordering::Relaxed);
        }
    });

    let insertions: Cow<'_, [WeightedArc]> = if b.insertions.is_sorted_by_key(|e| e.source) {
        Cow::Borrowed(&b.insertions)
    } else {
        let mut v = b.insertions.clone();
        v.sort_by_key(|e| e.source);
        Cow::Owned(v)
    };
    let groups: Vec<&[WeightedArc]> = insertions.chunk_by(|a, b| a.source == b.source).collect();
    groups.par_iter().for_each(|group| {
        let i = group[0].source as usize;
        let d = membership[i];
        let mut h = BTreeMap::new();
        for e in group.iter() {
            let c = membership[e.target as usize];
            if c != d {
                *h.entry(c).or_insert(0.0) += e.weight as f64;
            }
        }
        if let Some(c) = screening_target(&h, aux.vertex_weight[i], d, &aux.community_weight, m) {
            state.vertex[i].store(true, Ordering::Relaxed);
            state.neighbors[i].store(true, Ordering::Relaxed);
            state.community[c as usize].store(true, Ordering::Relaxed);
        }
    });

    (0..n).into_par_iter().with_min_len(CHUNK_SIZE).for_each(|i| {
        if state.neighbors[i].load(Ordering::Relaxed) {
            for &j in g_new.neighbors(i as VertexId) {
                state.vertex[j as usize].store(true, Ordering::Relaxed);
            }
        }
        if state.community[membership[i] as usize].load(Ordering::Relaxed) {
            state.vertex[i].store(true, Ordering::Relaxed);
        }
    });
    Ok(state)
}

fn finish(
    g: &Graph,
    k: Vec<f64>,
    outcome: crate::louvain::LouvainOutcome,
    affected_count: usize,
    start: Instant,
) -> DynamicResult {
    let sigma = community_weights(&k, outcome.communities.as_slice(), g.vertex_count());
    DynamicResult {
        communities: outcome.communities,
        aux: AuxWeights { vertex_weight: k, community_weight: sigma },
        stats: DynamicStats {
            affected_count,
            iterations: outcome.iterations,
            passes: outcome.passes,
            elapsed: start.elapsed(),
        },
    }
}

/// Naive-dynamic Louvain: every vertex is processed, starting from `c_prev`.
pub fn naive_dynamic(
    g_new: &Graph,
    b: &BatchUpdate,
    c_prev: &Communities,
    aux_prev: &AuxWeights,
    params: &LouvainParams,
) -> Result<DynamicResult> {
    let start = Instant::now();
    let aux = update_weights(g_new, b, c_prev, aux_prev)?;
    let outcome = louvain(g_new, c_prev, &aux, &AllAffected, params)?;
    Ok(finish(g_new, aux.vertex_weight, outcome, g_new.vertex_count(), start))
}

/// Delta-screening Louvain: the first pass is restricted to the screened
/// vertices.
pub fn delta_screening(
    g_new: &Graph,
    b: &BatchUpdate,
    c_prev: &Communities,
    aux_prev: &AuxWeights,
    params: &LouvainParams,
) -> Result<DynamicResult> {
    let start = Instant::now();
    let aux = update_weights(g_new, b, c_prev, aux_prev)?;
    let state = screening_affected(g_new, b, c_prev, &aux)?;
    let outcome = louvain(g_new, c_prev, &aux, &ScreeningHooks::new(&state.vertex), params)?;
    Ok(finish(g_new, aux.vertex_weight, outcome, state.affected_count(), start))
}

/// Dynamic frontier Louvain: starts from [`frontier_initial`] and flags the
/// neighbors of every vertex that migrates.
pub fn dynamic_frontier(
    g_new: &Graph,
    b: &BatchUpdate,
    c_prev: &Communities,
    aux_prev: &AuxWeights,
    params: &LouvainParams,
) -> Result<DynamicResult> {
    let start = Instant::now();
    let aux = update_weights(g_new, b, c_prev, aux_prev)?;
    let hooks = FrontierHooks::new(g_new, &frontier_initial(b, c_prev)?)?;
    let outcome = louvain(g_new, c_prev, &aux, &hooks, params)?;
    let affected = hooks.flagged_count();
    Ok(finish(g_new, aux.vertex_weight, outcome, affected, start))
}

/// Louvain from singletons with weights computed from scratch.
pub fn static_louvain(g: &Graph, params: &LouvainParams) -> Result<DynamicResult> {
    let start = Instant::now();
    if !(g.total_weight() > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let c = Communities::singletons(g.vertex_count());
    let aux = AuxWeights::from_scratch(g, &c)?;
    let outcome = louvain(g, &c, &aux, &AllAffected, params)?;
    Ok(finish(g, aux.vertex_weight, outcome, g.vertex_count(), start))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Approach {
    Static,
    NaiveDynamic,
    DeltaScreening,
    DynamicFrontier,
}

impl Approach {
    pub const ALL: [Approach; 4] =
        [Approach::Static, Approach::NaiveDynamic, Approach::DeltaScreening, Approach::DynamicFrontier];

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Static => "static",
            Approach::NaiveDynamic => "nd",
            Approach::DeltaScreening => "ds",
            Approach::DynamicFrontier => "df",
        }
    }

    pub fn is_dynamic(self) -> bool {
        self != Approach::Static
    }

    /// Runs this approach on the post-batch graph. `Static` ignores the
    /// batch and the previous state.
    pub fn run(
        self,
        g_new: &Graph,
        b: &BatchUpdate,
        c_prev: &Communities,
        aux_prev: &AuxWeights,
        params: &LouvainParams,
    ) -> Result<DynamicResult> {
        match self {
            Approach::Static => static_louvain(g_new, params),
            Approach::NaiveDynamic => naive_dynamic(g_new, b, c_prev, aux_prev, params),
            Approach::DeltaScreening => delta_screening(g_new, b, c_prev, aux_prev, params),
            Approach::DynamicFrontier => dynamic_frontier(g_new, b, c_prev, aux_prev, params),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(Approach::Static),
            "nd" | "naive" | "naive-dynamic" => Ok(Approach::NaiveDynamic),
            "ds" | "delta-screening" => Ok(Approach::DeltaScreening),
            "df" | "frontier" | "dynamic-frontier" => Ok(Approach::DynamicFrontier),
            other => Err(format!("unknown approach `{other}` (expected static, nd, ds or df)")),
        }
    }
}
