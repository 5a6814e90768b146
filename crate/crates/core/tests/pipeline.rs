use dyncomm_core::synth::planted_partition;
use dyncomm_core::{
    apply_batch, generate_random_batch, modularity, static_louvain, temporal_batches, Approach, AuxWeights,
    BatchSpec, TemporalEdge,
};

#[test]
fn every_approach_tracks_a_planted_graph() {
    let (g, planted) = planted_partition(2000, 20, 12.0, 2.0, 11);
    let params = Default::default();
    let start = static_louvain(&g, &params).unwrap();
    assert!(modularity(&g, &start.communities).unwrap() > 0.6);

    let mut states: Vec<_> = Approach::ALL
        .iter()
        .filter(|a| a.is_dynamic())
        .map(|&a| (a, start.communities.clone(), start.aux.clone()))
        .collect();
    let mut g = g;
    for k in 0..10 {
        let b = generate_random_batch(&g, &BatchSpec { size_fraction: 1e-3, seed: k, ..Default::default() }).unwrap();
        g = apply_batch(g, &b).unwrap();
        let q_static = modularity(&g, &static_louvain(&g, &params).unwrap().communities).unwrap();
        for (approach, c, aux) in &mut states {
            let r = approach.run(&g, &b, c, aux, &params).unwrap();
            assert!(r.aux.max_relative_difference(&AuxWeights::from_scratch(&g, &r.communities).unwrap()) < 1e-9);
            let q = modularity(&g, &r.communities).unwrap();
            assert!((q - q_static).abs() < 0.02, "{approach} batch {k}: {q} vs {q_static}");
            (*c, *aux) = (r.communities, r.aux);
        }
    }
    assert!(modularity(&g, &planted).unwrap() > 0.6);
}

#[test]
fn temporal_replay_rebuilds_the_final_graph() {
    let stream: Vec<TemporalEdge> = (0..500u32)
        .map(|t| TemporalEdge { source: t % 37, target: (t * 7 + 3) % 41, timestamp: t as i64 })
        .collect();
    let replay = temporal_batches(&stream, 1e-3).unwrap();
    let mut g = replay.base.clone();
    for b in &replay.batches {
        g = apply_batch(g, b).unwrap();
    }
    let mut expected: Vec<(u32, u32)> = stream
        .iter()
        .filter(|e| e.source != e.target)
        .map(|e| (e.source.min(e.target), e.source.max(e.target)))
        .collect();
    expected.sort_unstable();
    expected.dedup();
    assert_eq!(g.edge_count(), expected.len());
    for (i, j) in expected {
        assert!(g.has_arc(i, j) && g.has_arc(j, i));
    }
}
