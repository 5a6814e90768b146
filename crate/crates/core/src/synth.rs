//! Synthetic graphs: planted partitions for benchmarks and small named
//! fixtures used throughout the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{BatchUpdate, Graph, GraphBuilder, VertexId};
use crate::louvain::Communities;

/// Planted-partition graph: `communities` equal blocks over `n` vertices,
/// each vertex with about `intra_degree` neighbors inside its block and
/// `inter_degree` outside. Unit weights. Returns the graph and the planted
/// blocks.
pub fn planted_partition(
    n: usize,
    communities: usize,
    intra_degree: f64,
    inter_degree: f64,
    seed: u64,
) -> (Graph, Communities) {
    assert!(communities > 0 && communities <= n, "need 1..=n communities");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = |v: usize| v * communities / n;
    let starts: Vec<usize> = (0..=communities).map(|c| (c * n).div_ceil(communities)).collect();
    let intra = (n as f64 * intra_degree / 2.0).round() as usize;
    let inter = (n as f64 * inter_degree / 2.0).round() as usize;
    let mut b = GraphBuilder::with_capacity(n, intra + inter);
    for _ in 0..intra {
        let c = rng.gen_range(0..communities);
        let (lo, hi) = (starts[c], starts[c + 1]);
        if hi - lo < 2 {
            continue;
        }
        let i = rng.gen_range(lo..hi);
        let j = rng.gen_range(lo..hi);
        if i != j {
            b.add_edge(i as VertexId, j as VertexId, 1.0).expect("in range");
        }
    }
    if communities > 1 {
        let mut added = 0;
        while added < inter {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if block(i) != block(j) {
                b.add_edge(i as VertexId, j as VertexId, 1.0).expect("in range");
                added += 1;
            }
        }
    }
    let truth = Communities::new((0..n).map(|v| block(v) as u32).collect());
    (b.build(), truth)
}

/// Erdős–Rényi `G(n, p)` with integer weights drawn from `1..=max_weight`.
pub fn random_graph(n: usize, p: f64, max_weight: u32, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(n);
    for i in 0..n as VertexId {
        for j in i + 1..n as VertexId {
            if rng.gen_bool(p) {
                b.add_edge(i, j, rng.gen_range(1..=max_weight) as f32).expect("in range");
            }
        }
    }
    b.build()
}

/// Sparse random graph with about `edges` unit edges, for fixtures too large
/// for [`random_graph`].
pub fn sparse_random_graph(n: usize, edges: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::with_capacity(n, edges);
    for _ in 0..edges {
        let i = rng.gen_range(0..n as VertexId);
        let j = rng.gen_range(0..n as VertexId);
        if i != j {
            b.add_edge(i, j, 1.0).expect("in range");
        }
    }
    b.build()
}

fn unit_graph(n: usize, edges: &[(VertexId, VertexId)]) -> Graph {
    let mut b = GraphBuilder::new(n);
    for &(i, j) in edges {
        b.add_edge(i, j, 1.0).expect("fixture edge in range");
    }
    b.build()
}

/// Two 4-cliques `{0..4}` and `{4..8}` joined by the bridge `(3, 4)`.
pub fn barbell() -> Graph {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((base + i, base + j));
            }
        }
    }
    edges.push((3, 4));
    unit_graph(8, &edges)
}

/// Triangles `{0, 1, 2}` and `{3, 4, 5}` with no edge between them.
pub fn disjoint_triangles() -> Graph {
    unit_graph(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])
}

/// Triangles `{0, 1, 2}` and `{3, 4, 5}` joined by the edge `(2, 3)`.
pub fn bridged_triangles() -> Graph {
    unit_graph(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
}

/// Sixteen vertices in three communities (0 = red, 1 = green, 2 = blue)
/// at which no single move has positive gain, and a batch that deletes the
/// red edge `(1, 2)` and inserts the red–blue edge `(4, 12)`.
///
/// After the batch, vertex 2 (left with green neighbors 8 and 10 only) and
/// vertex 4 (neighbors 3, 6, 12, 14, 15) both gain by migrating: 2 to green,
/// 4 to blue.
pub fn frontier_example() -> (Graph, Communities, BatchUpdate) {
    const EDGES: &[(VertexId, VertexId, f32)] = &[
        // red
        (0, 1, 1.0), (0, 3, 1.0), (0, 5, 1.0), (0, 6, 1.0), (1, 3, 1.0), (1, 5, 1.0), (3, 5, 1.0),
        (3, 6, 1.0), (5, 6, 1.0), (1, 2, 3.0), (3, 4, 1.0), (4, 6, 1.0),
        // green
        (7, 8, 1.0), (7, 9, 1.0), (7, 10, 1.0), (7, 11, 1.0), (8, 9, 1.0), (8, 11, 1.0), (9, 10, 1.0),
        (9, 11, 1.0), (10, 11, 1.0), (2, 8, 1.0), (2, 10, 1.0),
        // blue
        (12, 13, 1.0), (12, 14, 1.0), (12, 15, 1.0), (13, 14, 4.0), (13, 15, 4.0), (14, 15, 2.0),
        (4, 14, 1.0), (4, 15, 1.0),
    ];
    let mut b = GraphBuilder::new(16);
    for &(i, j, w) in EDGES {
        b.add_edge(i, j, w).expect("fixture edge in range");
    }
    let communities = Communities::new(vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2]);
    let batch = BatchUpdate::from_undirected([(1, 2, 3.0)], [(4, 12, 1.0)]);
    (b.build(), communities, batch)
}
