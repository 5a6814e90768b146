//! Compressed sparse row storage for undirected weighted graphs and batch
//! mutation between snapshots.
//!
//! Every undirected edge `{i, j}` is stored as the two arcs `(i, j, w)` and
//! `(j, i, w)`; a self-loop `(i, i, w)` is stored once. Adjacency lists are
//! kept sorted by neighbor id so arc lookup is a binary search.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Compressed sparse adjacency of an undirected weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<VertexId>,
    weights: Vec<f32>,
    total_weight: f64,
}

impl Graph {
    /// Graph on `vertex_count` vertices without edges.
    pub fn empty(vertex_count: usize) -> Self {
        Self {
            offsets: vec![0; vertex_count + 1],
            neighbors: Vec::new(),
            weights: Vec::new(),
            total_weight: 0.0,
        }
    }

    /// Builds a graph from raw CSR arrays, checking every invariant.
    pub fn from_csr(offsets: Vec<usize>, neighbors: Vec<VertexId>, weights: Vec<f32>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::LengthMismatch { what: "offsets", found: 0, expected: 1 });
        }
        let total_weight = weights.iter().map(|&w| w as f64).sum();
        let g = Self { offsets, neighbors, weights, total_weight };
        g.validate()?;
        Ok(g)
    }

    /// Assembles a graph whose invariants the caller already guarantees.
    pub(crate) fn from_parts(offsets: Vec<usize>, neighbors: Vec<VertexId>, weights: Vec<f32>) -> Self {
        debug_assert_eq!(offsets.last().copied(), Some(neighbors.len()));
        let total_weight = weights.iter().map(|&w| w as f64).sum();
        Self { offsets, neighbors, weights, total_weight }
    }

    /// Builds a graph from directed arcs that must already be symmetric.
    ///
    /// Unlike [`GraphBuilder`], nothing is mirrored: duplicate arcs and arcs
    /// lacking their reverse (with an equal weight) are rejected.
    pub fn from_symmetric_arcs(vertex_count: usize, arcs: &[(VertexId, VertexId, f32)]) -> Result<Self> {
        for &(i, j, w) in arcs {
            check_vertex(i, vertex_count)?;
            check_vertex(j, vertex_count)?;
            check_weight(i, j, w)?;
        }
        let mut sorted = arcs.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(pair) = sorted.windows(2).find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::DuplicateArc { from: pair[0].0, to: pair[0].1 });
        }
        let g = csr_from_sorted_arcs(vertex_count, &sorted);
        g.check_symmetry()?;
        Ok(g)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored arcs (both directions of every edge, self-loops once).
    #[inline]
    pub fn arc_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Number of undirected edges, self-loops included.
    pub fn edge_count(&self) -> usize {
        let loops = (0..self.vertex_count())
            .filter(|&i| self.neighbors(i as VertexId).binary_search(&(i as VertexId)).is_ok())
            .count();
        (self.arc_count() - loops) / 2 + loops
    }

    /// Sum of all stored arc weights, i.e. `2m`.
    #[inline]
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    #[inline]
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn neighbors(&self, i: VertexId) -> &[VertexId] {
        let i = i as usize;
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn weights(&self, i: VertexId) -> &[f32] {
        let i = i as usize;
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `(neighbor, weight)` pairs of vertex `i`, sorted by neighbor.
    #[inline]
    pub fn edges(&self, i: VertexId) -> impl ExactSizeIterator<Item = (VertexId, f32)> + '_ {
        self.neighbors(i).iter().copied().zip(self.weights(i).iter().copied())
    }

    /// All stored arcs `(i, j, w)` in CSR order.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId, f32)> + '_ {
        (0..self.vertex_count() as VertexId).flat_map(move |i| self.edges(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn degree(&self, i: VertexId) -> Result<usize> {
        check_vertex(i, self.vertex_count())?;
        Ok(self.neighbors(i).len())
    }

    /// Sum of the weights of the arcs leaving `i`.
    pub fn weighted_degree(&self, i: VertexId) -> Result<f64> {
        check_vertex(i, self.vertex_count())?;
        Ok(self.weighted_degree_unchecked(i))
    }

    #[inline]
    pub(crate) fn weighted_degree_unchecked(&self, i: VertexId) -> f64 {
        self.weights(i).iter().map(|&w| w as f64).sum()
    }

    /// Weight of arc `(i, j)` if present.
    pub fn arc_weight(&self, i: VertexId, j: VertexId) -> Option<f32> {
        if i as usize >= self.vertex_count() {
            return None;
        }
        self.neighbors(i).binary_search(&j).ok().map(|k| self.weights(i)[k])
    }

    #[inline]
    pub fn has_arc(&self, i: VertexId, j: VertexId) -> bool {
        self.arc_weight(i, j).is_some()
    }

    /// Checks every structural invariant; used by tests and loaders.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertex_count();
        if self.offsets[0] != 0 || self.offsets[n] != self.neighbors.len() {
            return Err(Error::LengthMismatch {
                what: "offsets",
                found: self.offsets[n],
                expected: self.neighbors.len(),
            });
        }
        if self.weights.len() != self.neighbors.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                found: self.weights.len(),
                expected: self.neighbors.len(),
            });
        }
        if let Some(w) = self.offsets.windows(2).find(|w| w[0] > w[1]) {
            return Err(Error::InvalidParams(format!("offsets decrease: {} > {}", w[0], w[1])));
        }
        for i in 0..n as VertexId {
            let adj = self.neighbors(i);
            for (k, (j, w)) in self.edges(i).enumerate() {
                check_vertex(j, n)?;
                check_weight(i, j, w)?;
                if k > 0 && adj[k - 1] >= j {
                    return Err(Error::DuplicateArc { from: i, to: j });
                }
            }
        }
        self.check_symmetry()
    }

    fn check_symmetry(&self) -> Result<()> {
        for (i, j, w) in self.arcs() {
            if self.arc_weight(j, i) != Some(w) {
                return Err(Error::AsymmetricGraph { from: i, to: j });
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn check_vertex(i: VertexId, vertex_count: usize) -> Result<()> {
    if (i as usize) < vertex_count {
        Ok(())
    } else {
        Err(Error::VertexOutOfRange { vertex: i as u64, vertex_count })
    }
}

#[inline]
fn check_weight(i: VertexId, j: VertexId, w: f32) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight { from: i, to: j, weight: w as f64 })
    }
}

/// CSR from arcs sorted by `(source, target)` without duplicates.
fn csr_from_sorted_arcs(vertex_count: usize, arcs: &[(VertexId, VertexId, f32)]) -> Graph {
    let mut offsets = vec![0usize; vertex_count + 1];
    for &(i, _, _) in arcs {
        offsets[i as usize + 1] += 1;
    }
    for v in 0..vertex_count {
        offsets[v + 1] += offsets[v];
    }
    let neighbors = arcs.iter().map(|a| a.1).collect();
    let weights = arcs.iter().map(|a| a.2).collect();
    Graph::from_parts(offsets, neighbors, weights)
}

/// Accumulates undirected edges and produces a symmetric [`Graph`].
///
/// Repeated edges collapse onto their first occurrence, whichever direction
/// it was given in.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    vertex_count: usize,
    edges: Vec<(VertexId, VertexId, f32)>,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> Self {
        Self { vertex_count, edges: Vec::new() }
    }

    pub fn with_capacity(vertex_count: usize, edges: usize) -> Self {
        Self { vertex_count, edges: Vec::with_capacity(edges) }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn add_edge(&mut self, i: VertexId, j: VertexId, w: f32) -> Result<&mut Self> {
        check_vertex(i, self.vertex_count)?;
        check_vertex(j, self.vertex_count)?;
        check_weight(i, j, w)?;
        self.edges.push((i.min(j), i.max(j), w));
        Ok(self)
    }

    pub fn build(mut self) -> Graph {
        // Stable sort keeps the first occurrence of each pair at the front.
        self.edges.sort_by_key(|&(i, j, _)| (i, j));
        self.edges.dedup_by_key(|e| (e.0, e.1));
        let mut arcs = Vec::with_capacity(self.edges.len() * 2);
        for &(i, j, w) in &self.edges {
            arcs.push((i, j, w));
            if i != j {
                arcs.push((j, i, w));
            }
        }
        arcs.sort_unstable_by_key(|&(i, j, _)| (i, j));
        csr_from_sorted_arcs(self.vertex_count, &arcs)
    }
}

/// One directed arc of a batch update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedArc {
    pub source: VertexId,
    pub target: VertexId,
    pub weight: f32,
}

impl WeightedArc {
    pub const fn new(source: VertexId, target: VertexId, weight: f32) -> Self {
        Self { source, target, weight }
    }

    #[inline]
    pub fn key(&self) -> (VertexId, VertexId) {
        (self.source, self.target)
    }

    #[inline]
    pub fn reversed(&self) -> Self {
        Self::new(self.target, self.source, self.weight)
    }
}

/// Edge deletions and insertions transforming one snapshot into the next.
///
/// Both lists hold directed arcs and are closed under reversal: an undirected
/// change `{i, j}` appears as `(i, j)` and `(j, i)` (a self-loop once).
/// Deletions carry the weight of the arc they remove so that vertex and
/// community weights can be updated without the previous snapshot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchUpdate {
    pub deletions: Vec<WeightedArc>,
    pub insertions: Vec<WeightedArc>,
}

impl BatchUpdate {
    pub fn new() -> Self {
        Self::default()
    }

    /// Symmetric closure of undirected deletions and insertions, sorted by
    /// source vertex.
    pub fn from_undirected(
        deletions: impl IntoIterator<Item = (VertexId, VertexId, f32)>,
        insertions: impl IntoIterator<Item = (VertexId, VertexId, f32)>,
    ) -> Self {
        fn close(edges: impl IntoIterator<Item = (VertexId, VertexId, f32)>) -> Vec<WeightedArc> {
            let mut out = Vec::new();
            for (i, j, w) in edges {
                out.push(WeightedArc::new(i, j, w));
                if i != j {
                    out.push(WeightedArc::new(j, i, w));
                }
            }
            out
        }
        let mut batch = Self { deletions: close(deletions), insertions: close(insertions) };
        batch.sort_by_source();
        batch
    }

    pub fn is_empty(&self) -> bool {
        self.deletions.is_empty() && self.insertions.is_empty()
    }

    /// Total number of arcs in the batch.
    pub fn len(&self) -> usize {
        self.deletions.len() + self.insertions.len()
    }

    pub fn sort_by_source(&mut self) {
        self.deletions.sort_by_key(WeightedArc::key);
        self.insertions.sort_by_key(WeightedArc::key);
    }

    pub fn is_sorted_by_source(&self) -> bool {
        let sorted = |arcs: &[WeightedArc]| arcs.windows(2).all(|w| w[0].key() <= w[1].key());
        sorted(&self.deletions) && sorted(&self.insertions)
    }

    /// The batch that undoes this one.
    pub fn inverse(&self) -> Self {
        Self { deletions: self.insertions.clone(), insertions: self.deletions.clone() }
    }

    /// Sum of inserted arc weights minus the sum of deleted arc weights.
    pub fn weight_delta(&self) -> f64 {
        let sum = |arcs: &[WeightedArc]| arcs.iter().map(|a| a.weight as f64).sum::<f64>();
        sum(&self.insertions) - sum(&self.deletions)
    }

    /// Checks the batch against the graph it is about to be applied to.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.vertex_count();
        let mut deleted = HashMap::with_capacity(self.deletions.len());
        for a in &self.deletions {
            check_vertex(a.source, n)?;
            check_vertex(a.target, n)?;
            match g.arc_weight(a.source, a.target) {
                None => return Err(Error::MissingArc { from: a.source, to: a.target }),
                Some(stored) if stored != a.weight => {
                    return Err(Error::WeightMismatch {
                        from: a.source,
                        to: a.target,
                        given: a.weight,
                        stored,
                    })
                }
                Some(_) => {}
            }
            if deleted.insert(a.key(), a.weight).is_some() {
                return Err(Error::MissingArc { from: a.source, to: a.target });
            }
        }
        let mut inserted = HashMap::with_capacity(self.insertions.len());
        for a in &self.insertions {
            check_vertex(a.source, n)?;
            check_vertex(a.target, n)?;
            check_weight(a.source, a.target, a.weight)?;
            if g.has_arc(a.source, a.target) || inserted.insert(a.key(), a.weight).is_some() {
                return Err(Error::DuplicateArc { from: a.source, to: a.target });
            }
        }
        for (map, arcs) in [(&deleted, &self.deletions), (&inserted, &self.insertions)] {
            for a in arcs.iter() {
                if map.get(&(a.target, a.source)) != Some(&a.weight) {
                    return Err(Error::AsymmetricBatch { from: a.source, to: a.target });
                }
            }
        }
        Ok(())
    }
}

/// Applies a batch to a snapshot, producing the next snapshot.
///
/// Batches larger than 1% of the stored arcs rebuild the CSR from an edge
/// list; smaller ones splice each touched vertex's sorted adjacency and copy
/// untouched ranges through.
pub fn apply_batch(g: Graph, b: &BatchUpdate) -> Result<Graph> {
    b.validate(&g)?;
    if b.is_empty() {
        return Ok(g);
    }
    let total = g.total_weight + b.weight_delta();
    let mut next = if b.len() * 100 > g.arc_count() { rebuild(&g, b) } else { splice(&g, b) };
    next.total_weight = total;
    Ok(next)
}

fn rebuild(g: &Graph, b: &BatchUpdate) -> Graph {
    let deleted: HashSet<(VertexId, VertexId)> = b.deletions.iter().map(WeightedArc::key).collect();
    let mut arcs: Vec<_> = g.arcs().filter(|&(i, j, _)| !deleted.contains(&(i, j))).collect();
    arcs.extend(b.insertions.iter().map(|a| (a.source, a.target, a.weight)));
    arcs.sort_unstable_by_key(|&(i, j, _)| (i, j));
    csr_from_sorted_arcs(g.vertex_count(), &arcs)
}

fn splice(g: &Graph, b: &BatchUpdate) -> Graph {
    let n = g.vertex_count();
    let mut dels: Vec<_> = b.deletions.iter().map(WeightedArc::key).collect();
    dels.sort_unstable();
    let mut ins = b.insertions.clone();
    ins.sort_unstable_by_key(WeightedArc::key);

    let arc_count = g.arc_count() + ins.len() - dels.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(arc_count);
    let mut weights = Vec::with_capacity(arc_count);
    offsets.push(0);

    let (mut d, mut s) = (0, 0);
    let mut copied_from = 0; // first vertex whose adjacency is not yet copied
    while d < dels.len() || s < ins.len() {
        let v = match (dels.get(d), ins.get(s)) {
            (Some(x), Some(y)) => x.0.min(y.source),
            (Some(x), None) => x.0,
            (None, Some(y)) => y.source,
            (None, None) => unreachable!(),
        } as usize;
        // Bulk-copy untouched vertices [copied_from, v).
        let lo = g.offsets[copied_from];
        let hi = g.offsets[v];
        neighbors.extend_from_slice(&g.neighbors[lo..hi]);
        weights.extend_from_slice(&g.weights[lo..hi]);
        let shift = neighbors.len() as isize - hi as isize;
        offsets.extend((copied_from + 1..=v).map(|u| (g.offsets[u] as isize + shift) as usize));

        let d_end = d + dels[d..].iter().take_while(|x| x.0 as usize == v).count();
        let s_end = s + ins[s..].iter().take_while(|y| y.source as usize == v).count();
        let mut removed = dels[d..d_end].iter().map(|x| x.1).peekable();
        let mut added = ins[s..s_end].iter().peekable();
        for (j, w) in g.edges(v as VertexId) {
            if removed.peek() == Some(&j) {
                removed.next();
                continue;
            }
            while let Some(a) = added.next_if(|a| a.target < j) {
                neighbors.push(a.target);
                weights.push(a.weight);
            }
            neighbors.push(j);
            weights.push(w);
        }
        for a in added {
            neighbors.push(a.target);
            weights.push(a.weight);
        }
        offsets.push(neighbors.len());
        d = d_end;
        s = s_end;
        copied_from = v + 1;
    }
    let lo = g.offsets[copied_from];
    neighbors.extend_from_slice(&g.neighbors[lo..]);
    weights.extend_from_slice(&g.weights[lo..]);
    let shift = neighbors.len() as isize - g.arc_count() as isize;
    offsets.extend((copied_from + 1..=n).map(|u| (g.offsets[u] as isize + shift) as usize));
    Graph::from_parts(offsets, neighbors, weights)
}
