//! Aggregation phase and dendrogram bookkeeping.

use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use rayon::prelude::*;

use super::metrics::ScratchPool;
use super::Communities;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::CHUNK_SIZE;

/// Maps occupied community ids onto `[0, |Γ|)` in order of first
/// appearance. Returns the renumbered membership and `|Γ|`.
pub fn renumber_communities(c: &Communities) -> (Communities, usize) {
    let (membership, count) = renumber(c.as_slice());
    (Communities::new(membership), count)
}

pub(crate) fn renumber(membership: &[u32]) -> (Vec<u32>, usize) {
    let slots = membership.iter().copied().max().map_or(0, |x| x as usize + 1);
    let mut map = vec![u32::MAX; slots];
    let mut next = 0u32;
    let out = membership
        .iter()
        .map(|&c| {
            let slot = &mut map[c as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    (out, next as usize)
}

/// Composes two dendrogram levels: `result[i] = next[top[i]]`.
pub fn lookup_dendrogram(top: &Communities, next: &Communities) -> Result<Communities> {
    let next = next.as_slice();
    top.as_slice()
        .iter()
        .map(|&c| next.get(c as usize).copied().ok_or(Error::DendrogramOutOfRange { id: c, len: next.len() }))
        .collect::<Result<Vec<_>>>()
        .map(Communities::new)
}

/// Collapses every community of `c` into one super-vertex.
///
/// The arc between super-vertices `c` and `d` carries the total weight of
/// arcs between their members; the self-loop of `c` carries the total
/// weight of arcs inside `c`, both directions included. `c` must use
/// contiguous ids `[0, |Γ|)`.
pub fn aggregate_graph(g: &Graph, c: &Communities) -> Result<Graph> {
    let n = g.vertex_count();
    c.check_len(n)?;
    let membership = c.as_slice();
    let mut seen = vec![false; n];
    let mut count = 0;
    for &x in membership {
        if (x as usize) < n && !seen[x as usize] {
            seen[x as usize] = true;
            count += 1;
        }
    }
    if let Some(&bad) = membership.iter().find(|&&x| x as usize >= count) {
        return Err(Error::NonContiguousCommunities { id: bad, count });
    }
    Ok(aggregate(g, membership, count, &ScratchPool::new(count)))
}

pub(crate) fn aggregate(g: &Graph, membership: &[u32], count: usize, scratch: &ScratchPool) -> Graph {
    let n = g.vertex_count();

    // Vertices of each community, as a CSR.
    let mut community_offsets = vec![0usize; count + 1];
    for &c in membership {
        community_offsets[c as usize + 1] += 1;
    }
    exclusive_scan_in_place(&mut community_offsets);
    let cursors: Vec<AtomicUsize> = community_offsets[..count].iter().map(|&o| AtomicUsize::new(o)).collect();
    let slots: Vec<AtomicU32> = (0..n).map(|_| AtomicU32::new(0)).collect();
    (0..n).into_par_iter().with_min_len(CHUNK_SIZE).for_each(|i| {
        let at = cursors[membership[i] as usize].fetch_add(1, Ordering::Relaxed);
        slots[at].store(i as u32, Ordering::Relaxed);
    });
    let community_vertices: Vec<u32> = slots.into_iter().map(AtomicU32::into_inner).collect();

    // Super-vertex CSR with room for the total degree of each community.
    let mut capacity = vec![0usize; count + 1];
    for (i, &c) in membership.iter().enumerate() {
        capacity[c as usize + 1] += g.neighbors(i as VertexId).len();
    }
    exclusive_scan_in_place(&mut capacity);
    let mut neighbors = vec![0 as VertexId; capacity[count]];
    let mut weights = vec![0f32; capacity[count]];

    let mut regions: Vec<(&mut [VertexId], &mut [f32])> = Vec::with_capacity(count);
    {
        let (mut nrest, mut wrest) = (neighbors.as_mut_slice(), weights.as_mut_slice());
        for c in 0..count {
            let len = capacity[c + 1] - capacity[c];
            let (nh, nt) = nrest.split_at_mut(len);
            let (wh, wt) = wrest.split_at_mut(len);
            regions.push((nh, wh));
            nrest = nt;
            wrest = wt;
        }
    }
    let community_of = |j: VertexId| membership[j as usize];
    let lengths: Vec<usize> = regions
        .par_chunks_mut(CHUNK_SIZE)
        .enumerate()
        .flat_map_iter(|(chunk, regions)| {
            scratch.with(|s| {
                regions
                    .iter_mut()
                    .enumerate()
                    .map(|(k, (nb, wt))| {
                        let c = chunk * CHUNK_SIZE + k;
                        s.clear();
                        for &i in &community_vertices[community_offsets[c]..community_offsets[c + 1]] {
                            s.scan(g, community_of, i, true);
                        }
                        s.sort_touched();
                        for (slot, &d) in s.touched().iter().enumerate() {
                            nb[slot] = d;
                            wt[slot] = s.get(d) as f32;
                        }
                        s.touched().len()
                    })
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    drop(regions);

    // Close the holes left by the over-estimate.
    let mut offsets = Vec::with_capacity(count + 1);
    offsets.push(0usize);
    let mut write = 0;
    for c in 0..count {
        let read = capacity[c];
        let len = lengths[c];
        neighbors.copy_within(read..read + len, write);
        weights.copy_within(read..read + len, write);
        write += len;
        offsets.push(write);
    }
    neighbors.truncate(write);
    weights.truncate(write);
    Graph::from_parts(offsets, neighbors, weights)
}

fn exclusive_scan_in_place(counts: &mut [usize]) {
    // counts[0] is 0 and counts[k + 1] holds the size of bucket k.
    for k in 1..counts.len() {
        counts[k] += counts[k - 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::louvain::modularity;

    fn barbell() -> Graph {
        let mut b = GraphBuilder::new(8);
        for base in [0u32, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    b.add_edge(base + i, base + j, 1.0).unwrap();
                }
            }
        }
        b.add_edge(3, 4, 1.0).unwrap();
        b.build()
    }

    #[test]
    fn renumber_examples() {
        let (c, k) = renumber_communities(&Communities::new(vec![0, 0, 1]));
        assert_eq!((c.as_slice(), k), (&[0, 0, 1][..], 2));
        let (c, k) = renumber_communities(&Communities::new(vec![5, 5, 9]));
        assert_eq!((c.as_slice(), k), (&[0, 0, 1][..], 2));
    }

    #[test]
    fn lookup_examples() {
        let top = Communities::new(vec![0, 0, 1]);
        assert_eq!(lookup_dendrogram(&top, &Communities::singletons(2)).unwrap(), top);
        let next = Communities::new(vec![2, 2]);
        assert_eq!(lookup_dendrogram(&top, &next).unwrap().as_slice(), &[2, 2, 2]);
        assert_eq!(
            lookup_dendrogram(&Communities::new(vec![3]), &next),
            Err(Error::DendrogramOutOfRange { id: 3, len: 2 })
        );
    }

    #[test]
    fn singleton_aggregation_is_a_copy() {
        let g = barbell();
        assert_eq!(aggregate_graph(&g, &Communities::singletons(8)).unwrap(), g);
    }

    #[test]
    fn single_community_collapses_to_a_loop() {
        let g = barbell();
        let a = aggregate_graph(&g, &Communities::new(vec![0; 8])).unwrap();
        assert_eq!(a.vertex_count(), 1);
        assert_eq!(a.arcs().collect::<Vec<_>>(), vec![(0, 0, 26.0)]);
        assert_eq!(a.total_weight(), g.total_weight());
    }

    #[test]
    fn barbell_two_super_vertices() {
        let g = barbell();
        let c = Communities::new(vec![0, 0, 0, 0, 1, 1, 1, 1]);
        let a = aggregate_graph(&g, &c).unwrap();
        assert_eq!(a.arcs().collect::<Vec<_>>(), vec![(0, 0, 12.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 12.0)]);
        a.validate().unwrap();
        let q = modularity(&g, &c).unwrap();
        let qa = modularity(&a, &Communities::singletons(2)).unwrap();
        assert!((q - qa).abs() < 1e-12);
    }

    #[test]
    fn non_contiguous_ids_rejected() {
        let g = barbell();
        let c = Communities::new(vec![0, 0, 0, 0, 2, 2, 2, 2]);
        assert_eq!(aggregate_graph(&g, &c), Err(Error::NonContiguousCommunities { id: 2, count: 2 }));
    }
}
