//! Local-moving phase with vertex pruning.

use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;

use super::metrics::{delta_modularity, Scratch, ScratchPool};
use super::{AuxWeights, Communities, Hooks, LouvainParams};
use crate::atomic::AtomicF64;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::CHUNK_SIZE;

const IDLE: u32 = 0;

/// Unprocessed-vertex flags for the local-moving phase.
///
/// Each vertex holds the sweep number from which it is eligible, or 0 when
/// it has been processed. A vertex re-marked after its visit in sweep `t`
/// becomes eligible at `t + 1`; one re-marked before its visit is still
/// processed in `t`.
#[derive(Debug)]
pub struct PendingSet {
    stamps: Vec<AtomicU32>,
    round: u32,
}

impl PendingSet {
    /// All vertices processed.
    pub fn new(n: usize) -> Self {
        Self { stamps: (0..n).map(|_| AtomicU32::new(IDLE)).collect(), round: 0 }
    }

    /// All vertices unprocessed.
    pub fn all(n: usize) -> Self {
        Self { stamps: (0..n).map(|_| AtomicU32::new(1)).collect(), round: 0 }
    }

    pub fn len(&self) -> usize {
        self.stamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamps.is_empty()
    }

    /// Marks `i` unprocessed for the next sweep.
    #[inline]
    pub fn mark(&self, i: VertexId) {
        self.stamps[i as usize].store(self.round + 1, Ordering::Relaxed);
    }

    #[inline]
    pub fn is_pending(&self, i: VertexId) -> bool {
        self.stamps[i as usize].load(Ordering::Relaxed) != IDLE
    }

    pub fn pending_count(&self) -> usize {
        self.stamps.iter().filter(|s| s.load(Ordering::Relaxed) != IDLE).count()
    }

    fn begin_sweep(&mut self) -> u32 {
        self.round += 1;
        self.round
    }

    #[inline]
    fn take(&self, i: usize, round: u32) -> bool {
        let s = self.stamps[i].load(Ordering::Relaxed);
        if s == IDLE || s > round {
            return false;
        }
        self.stamps[i].store(IDLE, Ordering::Relaxed);
        true
    }

    #[inline]
    fn requeue(&self, j: VertexId, round: u32) {
        let _ = self.stamps[j as usize].compare_exchange(IDLE, round + 1, Ordering::Relaxed, Ordering::Relaxed);
    }
}

/// Shared per-level state: `C'`, `K'` and `Σ'`.
pub(crate) struct Level<'a> {
    pub membership: &'a [AtomicU32],
    pub vertex_weight: &'a [f64],
    pub community_weight: &'a [AtomicF64],
}

/// Runs sweeps until the summed gain of one sweep is at most `tolerance` or
/// `max_iterations` sweeps were made. Returns the number of sweeps.
pub(crate) fn local_move<H: Hooks + ?Sized>(
    g: &Graph,
    level: &Level<'_>,
    hooks: &H,
    tolerance: f64,
    max_iterations: usize,
    pending: &mut PendingSet,
    scratch: &ScratchPool,
) -> usize {
    let n = g.vertex_count();
    let m = g.total_weight() / 2.0;
    let chunks = n.div_ceil(CHUNK_SIZE);
    for iteration in 1..=max_iterations {
        let round = pending.begin_sweep();
        let pending = &*pending;
        let gain: f64 = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let lo = chunk * CHUNK_SIZE;
                let hi = (lo + CHUNK_SIZE).min(n);
                scratch.with(|s| {
                    (lo..hi)
                        .map(|i| {
                            if !pending.take(i, round) || !hooks.in_affected_range(i as VertexId) {
                                return 0.0;
                            }
                            move_vertex(g, level, hooks, pending, round, s, m, i as VertexId)
                        })
                        .sum::<f64>()
                })
            })
            .sum();
        if gain <= tolerance {
            return iteration;
        }
    }
    max_iterations
}

/// Moves `i` to its best neighboring community if that strictly improves
/// modularity; returns the gain realised.
#[inline]
#[allow(clippy::too_many_arguments)]
fn move_vertex<H: Hooks + ?Sized>(
    g: &Graph,
    level: &Level<'_>,
    hooks: &H,
    pending: &PendingSet,
    round: u32,
    s: &mut Scratch,
    m: f64,
    i: VertexId,
) -> f64 {
    s.clear();
    s.scan(g, |j| level.membership[j as usize].load(Ordering::Relaxed), i, false);
    if s.touched().is_empty() {
        return 0.0;
    }
    let d = level.membership[i as usize].load(Ordering::Relaxed);
    let k_i = level.vertex_weight[i as usize];
    let k_to_d = s.get(d);
    let sigma_d_excl = level.community_weight[d as usize].load() - k_i;

    let mut best: Option<u32> = None;
    let mut best_gain = 0.0;
    for &c in s.touched() {
        if c == d {
            continue;
        }
        let sigma_c = level.community_weight[c as usize].load();
        let gain = delta_modularity(s.get(c), k_to_d, k_i, sigma_c, sigma_d_excl, m);
        let wins = match best {
            None => gain > best_gain,
            Some(b) => gain > best_gain || (gain == best_gain && c < b),
        };
        if wins {
            best = Some(c);
            best_gain = gain;
        }
    }
    let Some(c) = best else { return 0.0 };

    level.community_weight[d as usize].fetch_add(-k_i);
    level.community_weight[c as usize].fetch_add(k_i);
    level.membership[i as usize].store(c, Ordering::Relaxed);
    hooks.on_change(i);
    for &j in g.neighbors(i) {
        pending.requeue(j, round);
    }
    best_gain
}

/// Local-moving phase over caller-owned state.
///
/// `c` and `aux` are updated in place; `pending` must already hold the
/// vertices to start from. Returns the number of iterations performed.
pub fn louvain_move<H: Hooks + ?Sized>(
    g: &Graph,
    c: &mut Communities,
    aux: &mut AuxWeights,
    hooks: &H,
    params: &LouvainParams,
    pending: &mut PendingSet,
) -> Result<usize> {
    let n = g.vertex_count();
    params.validate()?;
    c.validate(n)?;
    aux.check_len(n)?;
    if pending.len() != n {
        return Err(Error::LengthMismatch { what: "pending set", found: pending.len(), expected: n });
    }
    let membership: Vec<AtomicU32> = c.as_slice().iter().map(|&x| AtomicU32::new(x)).collect();
    let sigma: Vec<AtomicF64> = aux.community_weight.iter().map(|&x| AtomicF64::new(x)).collect();
    let level = Level { membership: &membership, vertex_weight: &aux.vertex_weight, community_weight: &sigma };
    let scratch = ScratchPool::new(n);
    let iterations = local_move(g, &level, hooks, params.tolerance, params.max_iterations, pending, &scratch);
    *c = Communities::new(membership.into_iter().map(AtomicU32::into_inner).collect());
    aux.community_weight = sigma.into_iter().map(AtomicF64::into_inner).collect();
    Ok(iterations)
}
