#![allow(clippy::needless_range_loop)]

//! Synthetic benchmarks, the dataset file format and adjacency invariants.

mod common;

use common::{random_graph, rng};
use gnnx_core::graph::{
    build_csr, column_normalized_adjacency, generate_ba2motifs, generate_feature_clusters, generate_tree_grid, spmv,
    sym_normalized_adjacency, DatasetBundle, Task,
};
use gnnx_core::Error;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn tree_grid_counts_and_ground_truth() {
    let d = generate_tree_grid(3, 1, 0).unwrap();
    let g = &d.graphs[0];
    assert_eq!(g.node_count, 16);
    assert_eq!(d.task, Task::NodeClassification);
    let labels = g.node_labels.as_ref().unwrap();
    assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 9);
    assert!(labels[..7].iter().all(|&l| l == 0));
    // 6 tree edges, 1 attachment, 12 grid edges
    assert_eq!(g.edges.len(), 6 + 1 + 12);
    assert_eq!(g.ground_truth_edges.as_ref().unwrap().len(), 12);

    let big = generate_tree_grid(8, 80, 0).unwrap();
    assert_eq!(big.graphs[0].node_count, 255 + 720);
    assert!(matches!(generate_tree_grid(3, 0, 0), Err(Error::InvalidParams(_))));
    assert!(matches!(generate_tree_grid(1, 2, 0), Err(Error::InvalidParams(_))));
}

#[test]
fn ba2motifs_structure() {
    let d = generate_ba2motifs(10, 12, 3).unwrap();
    assert_eq!(d.graphs.iter().filter(|g| g.graph_label == Some(0)).count(), 5);
    assert_eq!(d.graphs.iter().filter(|g| g.graph_label == Some(1)).count(), 5);
    for g in &d.graphs {
        assert_eq!(g.node_count, 17);
        let motif = g.ground_truth_edges.as_ref().unwrap();
        assert_eq!(motif.len(), if g.graph_label == Some(0) { 6 } else { 5 });
        assert!(motif.iter().all(|&(s, t)| s >= 12 && t >= 12));
        // base tree, one attachment edge, motif
        assert_eq!(g.edges.len(), 11 + 1 + motif.len());
        let mut degree = vec![0; 5];
        for &(s, t) in motif {
            degree[s - 12] += 1;
            degree[t - 12] += 1;
        }
        let mut sorted = degree.clone();
        sorted.sort_unstable();
        let expected = if g.graph_label == Some(0) { vec![2, 2, 2, 3, 3] } else { vec![2; 5] };
        assert_eq!(sorted, expected);
        assert!(g.node_features.data().iter().all(|&x| x == 0.1));
        assert_eq!(g.feature_dim(), 10);
        // connected
        assert!(g.hop_distances(0).iter().all(Option::is_some));
    }
    assert!(matches!(generate_ba2motifs(3, 10, 0), Err(Error::InvalidParams(_))));
    assert!(matches!(generate_ba2motifs(4, 4, 0), Err(Error::InvalidParams(_))));
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(generate_ba2motifs(8, 9, 5).unwrap(), generate_ba2motifs(8, 9, 5).unwrap());
    assert_ne!(generate_ba2motifs(8, 9, 5).unwrap(), generate_ba2motifs(8, 9, 6).unwrap());
    assert_eq!(generate_tree_grid(4, 3, 1).unwrap(), generate_tree_grid(4, 3, 1).unwrap());
    assert_eq!(generate_feature_clusters(50, 3, 4, 2).unwrap(), generate_feature_clusters(50, 3, 4, 2).unwrap());
}

#[test]
fn ground_truth_is_a_subset_of_edges() {
    for seed in 0..5 {
        for d in [generate_ba2motifs(6, 8, seed).unwrap(), generate_tree_grid(4, 4, seed).unwrap()] {
            for g in &d.graphs {
                for e in g.ground_truth_edges.as_ref().unwrap() {
                    assert!(g.edges.contains(e));
                }
            }
        }
    }
}

#[test]
fn dataset_files_round_trip_and_report_positions() {
    let dir = std::env::temp_dir().join(format!("gnnx-generators-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let original = generate_ba2motifs(4, 6, 9).unwrap();
    let path = dir.join("ba_small.json");
    original.save(&path).unwrap();
    let loaded = DatasetBundle::load(&path).unwrap();
    assert_eq!(loaded.id, "ba_small");
    assert_eq!(loaded.graphs, original.graphs);
    assert_eq!(loaded.split, original.split);

    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, vec!["graphs", "num_classes", "split", "task"]);
    assert_eq!(v["task"], "graph_classification");

    std::fs::write(&path, "{\n  \"task\": \"node_classification\",\n  \"num_classes\": oops\n}").unwrap();
    let err = DatasetBundle::load(&path).unwrap_err();
    assert!(matches!(err, Error::Parse(_)));
    assert!(err.to_string().contains("line 3"), "{}", err);
    std::fs::remove_dir_all(&dir).unwrap();
}

fn dense(m: &gnnx_core::graph::SparseMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m.n_cols()]; m.n_rows()];
    for (i, j, v) in m.entries() {
        out[i][j] = v;
    }
    out
}

#[test]
fn csr_examples() {
    let m = build_csr(&[(0, 1)], 2, 2, None).unwrap();
    assert_eq!((m.row_offsets(), m.col_indices(), m.values()), (&[0, 1, 1][..], &[1][..], &[1.0][..]));
    let m = build_csr(&[(1, 0), (0, 1)], 2, 2, None).unwrap();
    assert_eq!(m.row_offsets(), &[0, 1, 2]);
    assert!(build_csr(&[(0, 1), (0, 1)], 2, 2, None).is_err());
    assert!(build_csr(&[(0, 2)], 2, 2, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_normalized_columns_sum_to_one(seed in any::<u64>(), n in 1usize..10, directed in any::<bool>()) {
        let g = random_graph(n, 0.3, directed, 1, &mut rng(seed));
        let adj = column_normalized_adjacency(&g).unwrap();
        for s in adj.matrix.column_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn spmv_matches_dense_product(seed in any::<u64>(), n in 1usize..9, m in 1usize..9) {
        let mut r = rng(seed);
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if r.random::<f64>() < 0.4 {
                    entries.push((i, j));
                    values.push(r.random_range(-3.0..3.0));
                }
            }
        }
        let a = build_csr(&entries, n, m, Some(&values)).unwrap();
        let v: Vec<f64> = (0..m).map(|_| r.random_range(-3.0..3.0)).collect();
        let got = spmv(&a, &v).unwrap();
        let d = dense(&a);
        for i in 0..n {
            let want: f64 = (0..m).map(|j| d[i][j] * v[j]).sum();
            prop_assert!((got[i] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetric_normalization_is_symmetric(seed in any::<u64>(), n in 1usize..10) {
        let g = random_graph(n, 0.4, false, 1, &mut rng(seed));
        let d = dense(&sym_normalized_adjacency(&g).unwrap().matrix);
        for i in 0..n {
            for j in 0..n {
                prop_assert!((d[i][j] - d[j][i]).abs() <= 1e-12);
            }
        }
    }
}
