//! Property tests for the on-disk graph formats.

use gccl_core::graph::{load_graph, save_graph, SparseGraph};
use ndarray::Array2;
use proptest::prelude::*;

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e12..1e12f64,
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
        Just(f64::MIN_POSITIVE),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_then_load_reproduces_the_graph_bit_exactly(
        n in 1usize..24,
        edge_seeds in proptest::collection::vec((0usize..24, 0usize..24), 0..40),
        feature_values in proptest::collection::vec(finite_f64(), 24 * 3),
    ) {
        let edges: Vec<(usize, usize)> = edge_seeds
            .into_iter()
            .map(|(u, v)| (u % n, v % n))
            .collect();
        let features = Array2::from_shape_fn((n, 3), |(i, j)| feature_values[i * 3 + j]);
        let graph = SparseGraph::from_edges(n, &edges, features).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let edge_path = dir.path().join("edges.txt");
        let feature_path = dir.path().join("features.bin");
        save_graph(&graph, &edge_path, &feature_path).unwrap();
        let reloaded = load_graph(&edge_path, &feature_path).unwrap();
        prop_assert!(reloaded == graph);
    }

    #[test]
    fn raw_coarse_mass_counts_every_edge_endpoint(
        n in 2usize..24,
        edge_seeds in proptest::collection::vec((0usize..24, 0usize..24), 1..50),
        m in 1usize..5,
    ) {
        let edges: Vec<(usize, usize)> = edge_seeds
            .into_iter()
            .map(|(u, v)| (u % n, v % n))
            .collect();
        let features = Array2::zeros((n, 2));
        let graph = SparseGraph::from_edges(n, &edges, features).unwrap();
        let m = m.min(n);
        let assignment: Vec<usize> = (0..n).map(|i| i % m).collect();
        let partition = gccl_core::partition::Partition::from_assignment(&assignment).unwrap();
        let coarse = gccl_core::partition::coarsen(
            &graph,
            &partition,
            gccl_core::partition::CoarsenNormalization::Raw,
        );
        prop_assert_eq!(coarse.matrix.sum(), 2.0 * graph.edge_count() as f64);
    }
}
