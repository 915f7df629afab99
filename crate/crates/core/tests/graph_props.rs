use magenta_core::graph::{
    build_complete_graph, build_mixing_matrix, build_path_graph, build_random_geometric_graph, incidence_matrix,
    max_consensus, max_consensus_rounds, Graph, GraphError,
};
use magenta_core::linalg::AgentMatrix;
use magenta_core::rng::{rng_from_seed, standard_normal_vec};
use magenta_core::MixingRule;
use proptest::prelude::*;

fn rules() -> impl Strategy<Value = MixingRule> {
    prop_oneof![
        Just(MixingRule::MetropolisHastings),
        (0.01f64..1.0).prop_map(|delta_factor| MixingRule::LaplacianShift { delta_factor }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixing_matrix_certificates(n in 2usize..16, radius in 0.35f64..0.95, seed in any::<u64>(), rule in rules()) {
        let g = build_random_geometric_graph(n, radius, seed).unwrap();
        let w = build_mixing_matrix(&g, rule).unwrap();
        let m = w.entries();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| m[(i, j)]).sum();
            prop_assert!((row - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert!((m[(i, j)] - m[(j, i)]).abs() <= 1e-12);
                if i != j {
                    prop_assert_eq!(m[(i, j)] > 0.0, g.has_edge(i, j));
                    prop_assert!(m[(i, j)] >= 0.0);
                }
            }
        }
        prop_assert!(w.eta() < 1.0);
        prop_assert!(w.deviation_norm() < 1.0);
        prop_assert!(w.eta() <= w.deviation_norm() + 1e-12);
    }

    #[test]
    fn contraction_towards_average(n in 2usize..12, seed in any::<u64>(), rule in rules()) {
        let g = build_random_geometric_graph(n, 0.6, seed).unwrap();
        let w = build_mixing_matrix(&g, rule).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..50 {
            let x = AgentMatrix::from_row_major(n, 2, standard_normal_vec(&mut rng, 2 * n)).unwrap();
            let wx = w.mix(&x);
            prop_assert!(wx.consensus_sq().sqrt() <= w.deviation_norm() * x.consensus_sq().sqrt() * (1.0 + 1e-12) + 1e-15);
            // Mixing keeps the average.
            for (a, b) in wx.mean_row().iter().zip(x.mean_row()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn incidence_gram_is_laplacian(n in 2usize..15, seed in any::<u64>()) {
        let g = build_random_geometric_graph(n, 0.6, seed).unwrap();
        let a = incidence_matrix(&g);
        let e = a.entries();
        for r in 0..e.nrows() {
            let plus: Vec<usize> = (0..n).filter(|&j| e[(r, j)] == 1.0).collect();
            let minus: Vec<usize> = (0..n).filter(|&j| e[(r, j)] == -1.0).collect();
            prop_assert_eq!(plus.len(), 1);
            prop_assert_eq!(minus.len(), 1);
            prop_assert!(plus[0] < minus[0]);
        }
        let gram = a.gram();
        let lap = g.laplacian();
        prop_assert_eq!(&gram, &lap);
        for i in 0..n {
            prop_assert_eq!((0..n).map(|j| gram[(i, j)]).sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn max_consensus_within_diameter(n in 2usize..20, seed in any::<u64>(), values in prop::collection::vec(-1e6f64..1e6, 20)) {
        let g = build_random_geometric_graph(n, 0.5, seed).unwrap();
        let vals = &values[..n];
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let out = max_consensus_rounds(vals, &g, g.diameter()).unwrap();
        prop_assert!(out.iter().all(|&v| v == top));
        prop_assert_eq!(max_consensus(vals, &g).unwrap(), out);
    }

    #[test]
    fn edge_list_round_trip(n in 2usize..12, seed in any::<u64>()) {
        let g = build_random_geometric_graph(n, 0.7, seed).unwrap();
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back.n_agents(), n);
        prop_assert_eq!(back.edges(), g.edges());
    }
}

#[test]
fn small_graph_examples() {
    assert_eq!(build_path_graph(2).unwrap().edges(), &[(0, 1)]);
    assert_eq!(build_path_graph(3).unwrap().edges(), &[(0, 1), (1, 2)]);
    assert!(matches!(build_path_graph(1), Err(GraphError::InvalidSize { .. })));
    assert_eq!(build_complete_graph(4).unwrap().edges().len(), 6);
    assert!(build_random_geometric_graph(5, 1.5, 0).is_err());

    let a = incidence_matrix(&build_path_graph(3).unwrap());
    let e = a.entries();
    assert_eq!(e.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, -1.0, 0.0]);
    assert_eq!(e.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, -1.0]);
    assert_eq!(incidence_matrix(&build_path_graph(2).unwrap()).lambda_max(), 2.0);

    let w = build_mixing_matrix(
        &build_path_graph(2).unwrap(),
        MixingRule::LaplacianShift { delta_factor: 0.0 },
    )
    .unwrap();
    assert!(w.entries().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    assert!(w.eta().abs() < 1e-15 && w.deviation_norm().abs() < 1e-15);

    let p3 = build_path_graph(3).unwrap();
    assert_eq!(max_consensus_rounds(&[1.0, 5.0, 2.0], &p3, 2).unwrap(), vec![5.0; 3]);
    assert_eq!(
        max_consensus_rounds(&[3.0, 7.0], &build_path_graph(2).unwrap(), 1).unwrap(),
        vec![7.0; 2]
    );
}

#[test]
fn two_nodes_at_large_radius_are_joined() {
    for seed in 0..200 {
        assert_eq!(build_random_geometric_graph(2, 0.999, seed).unwrap().edges(), &[(0, 1)]);
    }
}

#[test]
fn disconnected_graphs_rejected() {
    assert!(matches!(Graph::new(4, [(0, 1), (2, 3)]), Err(GraphError::Disconnected)));
    assert!(matches!(Graph::new(3, [(0, 0), (1, 2)]), Err(GraphError::SelfLoop(..))));
    assert!(matches!(
        Graph::new(3, [(0, 1), (1, 0), (1, 2)]),
        Err(GraphError::DuplicateEdge(..))
    ));
}
