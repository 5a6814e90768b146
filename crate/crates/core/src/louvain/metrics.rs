//! Modularity, delta-modularity and the per-vertex community scan.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;

use super::Communities;
use crate::error::{Error, Result};
use crate::graph::{check_vertex, Graph, VertexId};

/// Modularity of a partition:
/// `Q = Σ_c [σ_c / 2m − (Σ_c / 2m)²]`, where `σ_c` is the weight of arcs
/// inside `c` and `Σ_c` the total weight of arcs leaving members of `c`.
pub fn modularity(g: &Graph, c: &Communities) -> Result<f64> {
    let n = g.vertex_count();
    c.check_len(n)?;
    let two_m = g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::ZeroTotalWeight);
    }
    let membership = c.as_slice();
    let (intra, degrees): (f64, Vec<f64>) = {
        let degrees: Vec<f64> = (0..n as VertexId)
            .into_par_iter()
            .map(|i| g.weighted_degree_unchecked(i))
            .collect();
        let intra = (0..n as VertexId)
            .into_par_iter()
            .map(|i| {
                let ci = membership[i as usize];
                g.edges(i)
                    .filter(|&(j, _)| membership[j as usize] == ci)
                    .map(|(_, w)| w as f64)
                    .sum::<f64>()
            })
            .sum();
        (intra, degrees)
    };
    let slots = membership.iter().copied().max().map_or(0, |x| x as usize + 1);
    let mut totals = vec![0.0f64; slots];
    for (i, &k) in degrees.iter().enumerate() {
        totals[membership[i] as usize] += k;
    }
    let expected: f64 = totals.iter().map(|&s| (s / two_m) * (s / two_m)).sum();
    Ok(intra / two_m - expected)
}

/// Gain in modularity from moving vertex `i` out of community `d` into `c`.
///
/// `k_to_c` / `k_to_d` are the weights of `i`'s edges into `c` / `d`
/// (self-loop excluded), `k_i` its weighted degree, and `m` half the total
/// arc weight. Both community totals exclude `i`'s own contribution:
/// `sigma_d_excl = Σ_d − K_i`, and `sigma_c` is `Σ_c` for any other
/// community (so `c = d` gives `sigma_c = sigma_d_excl` and a gain of 0).
#[inline]
pub fn delta_modularity(k_to_c: f64, k_to_d: f64, k_i: f64, sigma_c: f64, sigma_d_excl: f64, m: f64) -> f64 {
    (k_to_c - k_to_d) / m - k_i * (sigma_c - sigma_d_excl) / (2.0 * m * m)
}

/// Total edge weight from `i` to each community linked to it.
pub fn scan_communities(
    g: &Graph,
    c: &Communities,
    i: VertexId,
    include_self: bool,
) -> Result<BTreeMap<u32, f64>> {
    let n = g.vertex_count();
    c.check_len(n)?;
    check_vertex(i, n)?;
    let membership = c.as_slice();
    let mut out = BTreeMap::new();
    for (j, w) in g.edges(i) {
        if include_self || j != i {
            *out.entry(membership[j as usize]).or_insert(0.0) += w as f64;
        }
    }
    Ok(out)
}

/// Collision-free dense map from community id to accumulated weight.
///
/// Only the touched ids are reset between uses.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    weight: Vec<f64>,
    touched: Vec<u32>,
}

impl Scratch {
    pub(crate) fn with_len(n: usize) -> Self {
        Self { weight: vec![0.0; n], touched: Vec::new() }
    }

    #[inline]
    pub(crate) fn add(&mut self, c: u32, w: f64) {
        let slot = &mut self.weight[c as usize];
        // Weights are strictly positive, so a zero slot has not been touched.
        if *slot == 0.0 {
            self.touched.push(c);
        }
        *slot += w;
    }

    #[inline]
    pub(crate) fn get(&self, c: u32) -> f64 {
        self.weight[c as usize]
    }

    #[inline]
    pub(crate) fn touched(&self) -> &[u32] {
        &self.touched
    }

    pub(crate) fn sort_touched(&mut self) {
        self.touched.sort_unstable();
    }

    #[inline]
    pub(crate) fn clear(&mut self) {
        for &c in &self.touched {
            self.weight[c as usize] = 0.0;
        }
        self.touched.clear();
    }

    /// Adds the weight of every arc of `i` to the bucket of its target's
    /// community.
    #[inline]
    pub(crate) fn scan(&mut self, g: &Graph, community_of: impl Fn(VertexId) -> u32, i: VertexId, include_self: bool) {
        for (j, w) in g.edges(i) {
            if include_self || j != i {
                self.add(community_of(j), w as f64);
            }
        }
    }
}

/// One [`Scratch`] per rayon worker.
pub(crate) struct ScratchPool {
    slots: Vec<Mutex<Scratch>>,
}

impl ScratchPool {
    pub(crate) fn new(n: usize) -> Self {
        let workers = rayon::current_num_threads().max(1);
        Self { slots: (0..workers).map(|_| Mutex::new(Scratch::with_len(n))).collect() }
    }

    pub(crate) fn with<R>(&self, f: impl FnOnce(&mut Scratch) -> R) -> R {
        let slot = rayon::current_thread_index().unwrap_or(0) % self.slots.len();
        let mut guard = self.slots[slot].lock().unwrap_or_else(|e| e.into_inner());
        guard.clear();
        f(&mut guard)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Graph {
        let mut b = GraphBuilder::new(n);
        for &(i, j) in edges {
            b.add_edge(i, j, 1.0).unwrap();
        }
        b.build()
    }

    /// Brute-force double sum over arcs: (1/2m) Σ_(i,j) [w_ij − K_i K_j / 2m] δ(C_i, C_j),
    /// with the null-model term taken over all ordered vertex pairs.
    fn modularity_oracle(g: &Graph, c: &[u32]) -> f64 {
        let n = g.vertex_count();
        let two_m = g.total_weight();
        let k: Vec<f64> = (0..n as u32).map(|i| g.weighted_degree(i).unwrap()).collect();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if c[i] == c[j] {
                    let w = g.arc_weight(i as u32, j as u32).unwrap_or(0.0) as f64;
                    q += w - k[i] * k[j] / two_m;
                }
            }
        }
        q / two_m
    }

    pub(crate) fn barbell() -> Graph {
        let mut edges = Vec::new();
        for base in [0u32, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((3, 4));
        graph(8, &edges)
    }

    #[test]
    fn one_community_is_zero() {
        let g = barbell();
        let q = modularity(&g, &Communities::new(vec![0; 8])).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn single_edge_singletons() {
        let g = graph(2, &[(0, 1)]);
        assert_eq!(modularity(&g, &Communities::singletons(2)).unwrap(), -0.5);
    }

    #[test]
    fn barbell_cliques_match_oracle() {
        let g = barbell();
        let c = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let q = modularity(&g, &Communities::new(c.clone())).unwrap();
        let oracle = modularity_oracle(&g, &c);
        // 2m = 26, σ = 12 per clique, Σ = 13 per clique: 24/26 − 2·(1/2)² = 11/26.
        assert!((oracle - 11.0 / 26.0).abs() < 1e-12);
        assert!((q - oracle).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_graph_is_an_error() {
        let g = Graph::empty(3);
        assert_eq!(modularity(&g, &Communities::singletons(3)), Err(Error::ZeroTotalWeight));
    }

    #[test]
    fn identity_move_has_zero_gain() {
        // k_to_c = k_to_d and sigma_c = sigma_d_excl.
        assert_eq!(delta_modularity(3.0, 3.0, 5.0, 7.0, 7.0, 11.0), 0.0);
    }

    #[test]
    fn hand_evaluated_gain_matches_brute_force() {
        // Vertex 0 alone in its community, two unit edges into {1, 2}
        // (Σ = 4), and m = 10 from a 7-edge path elsewhere.
        let mut edges = vec![(0, 1), (0, 2), (1, 2)];
        edges.extend((3..10).map(|v| (v, v + 1)));
        let g = graph(11, &edges);
        assert_eq!(g.total_weight(), 20.0);
        let before: Vec<u32> = vec![0, 1, 1, 3, 3, 3, 3, 3, 3, 3, 3];
        let mut after = before.clone();
        after[0] = 1;
        let dq = delta_modularity(2.0, 0.0, 2.0, 4.0, 0.0, 10.0);
        let oracle = modularity_oracle(&g, &after) - modularity_oracle(&g, &before);
        assert!((dq - 0.16).abs() < 1e-12);
        assert!((dq - oracle).abs() < 1e-12);
    }

    #[test]
    fn scan_isolated_is_empty() {
        let g = Graph::empty(2);
        assert!(scan_communities(&g, &Communities::singletons(2), 1, false).unwrap().is_empty());
    }

    #[test]
    fn scan_accumulates_weights() {
        let mut b = GraphBuilder::new(6);
        b.add_edge(0, 1, 1.0).unwrap().add_edge(0, 2, 2.0).unwrap();
        let g = b.build();
        let c = Communities::new(vec![0, 5, 5, 3, 4, 5]);
        let map = scan_communities(&g, &c, 0, false).unwrap();
        assert_eq!(map.into_iter().collect::<Vec<_>>(), vec![(5, 3.0)]);
    }

    #[test]
    fn scan_k4_two_halves() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let c = Communities::new(vec![0, 0, 1, 1]);
        let map = scan_communities(&g, &c, 0, false).unwrap();
        assert_eq!(map.into_iter().collect::<Vec<_>>(), vec![(0, 1.0), (1, 2.0)]);
    }

    #[test]
    fn scan_self_flag_controls_loops() {
        let mut b = GraphBuilder::new(2);
        b.add_edge(0, 0, 4.0).unwrap().add_edge(0, 1, 1.0).unwrap();
        let g = b.build();
        let c = Communities::new(vec![0, 0]);
        assert_eq!(scan_communities(&g, &c, 0, false).unwrap()[&0], 1.0);
        assert_eq!(scan_communities(&g, &c, 0, true).unwrap()[&0], 5.0);
    }
}
