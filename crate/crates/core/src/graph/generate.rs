use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{DatasetBundle, Graph, Split, Task};
use crate::nn::DenseMatrix;
use crate::{Error, Result};

/// Width and value of the constant node features used by the structural benchmarks.
pub const CONSTANT_FEATURE_DIM: usize = 10;
pub const CONSTANT_FEATURE_VALUE: f64 = 0.1;

const GRID_SIDE: usize = 3;
const MOTIF_SIZE: usize = 5;

fn constant_features(n: usize) -> DenseMatrix {
    DenseMatrix::filled(n, CONSTANT_FEATURE_DIM, CONSTANT_FEATURE_VALUE)
}

/// Balanced binary tree of the given depth with `num_grids` 3x3 grids, each
/// hung off a uniformly chosen tree node by a single edge.
///
/// Node labels: 0 for tree nodes, 1 for grid nodes. Grid-internal edges are
/// recorded as ground truth.
pub fn generate_tree_grid(depth: u32, num_grids: usize, seed: u64) -> Result<DatasetBundle> {
    if !(2..=20).contains(&depth) {
        return Err(Error::InvalidParams(format!("tree depth must be in 2..=20, got {}", depth)));
    }
    if num_grids == 0 {
        return Err(Error::InvalidParams("num_grids must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree_nodes = (1usize << depth) - 1;
    let grid_nodes = GRID_SIDE * GRID_SIDE;
    let node_count = tree_nodes + num_grids * grid_nodes;

    let mut edges = Vec::new();
    for parent in 0..tree_nodes {
        for child in [2 * parent + 1, 2 * parent + 2] {
            if child < tree_nodes {
                edges.push((parent, child));
            }
        }
    }
    let mut ground_truth = Vec::new();
    for g in 0..num_grids {
        let base = tree_nodes + g * grid_nodes;
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE {
                let id = base + r * GRID_SIDE + c;
                if c + 1 < GRID_SIDE {
                    ground_truth.push((id, id + 1));
                }
                if r + 1 < GRID_SIDE {
                    ground_truth.push((id, id + GRID_SIDE));
                }
            }
        }
        edges.push((rng.random_range(0..tree_nodes), base));
    }
    edges.extend_from_slice(&ground_truth);

    let labels = (0..node_count).map(|i| usize::from(i >= tree_nodes)).collect();
    let mut graph = Graph::new(node_count, edges, false, constant_features(node_count))?;
    graph.node_labels = Some(labels);
    graph.ground_truth_edges = Some(ground_truth);
    let split = Split::random(node_count, &mut rng);
    DatasetBundle::new("tree_grid", Task::NodeClassification, vec![graph], 2, split)
}

/// Barabási–Albert base graphs (one edge per new node), each carrying a house
/// motif (label 0) or a 5-cycle (label 1). Graphs alternate labels, so the
/// classes are exactly balanced. Motif edges are recorded as ground truth.
pub fn generate_ba2motifs(num_graphs: usize, base_size: usize, seed: u64) -> Result<DatasetBundle> {
    if num_graphs == 0 || !num_graphs.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("num_graphs must be a positive even number, got {}", num_graphs)));
    }
    if base_size < 5 {
        return Err(Error::InvalidParams(format!("base_size must be >= 5, got {}", base_size)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(num_graphs);
    for i in 0..num_graphs {
        let label = i % 2;
        let mut edges = barabasi_albert_tree(base_size, &mut rng);
        let m = |k: usize| base_size + k;
        let motif: Vec<(usize, usize)> = if label == 0 {
            // square 0-1-2-3 with roof node 4 over the 0-1 side
            vec![(m(0), m(1)), (m(1), m(2)), (m(2), m(3)), (m(3), m(0)), (m(0), m(4)), (m(1), m(4))]
        } else {
            (0..MOTIF_SIZE).map(|k| (m(k), m((k + 1) % MOTIF_SIZE))).collect()
        };
        edges.push((rng.random_range(0..base_size), m(0)));
        edges.extend_from_slice(&motif);
        let n = base_size + MOTIF_SIZE;
        let mut graph = Graph::new(n, edges, false, constant_features(n))?;
        graph.graph_label = Some(label);
        graph.ground_truth_edges = Some(motif);
        graphs.push(graph);
    }
    let split = Split::random(num_graphs, &mut rng);
    DatasetBundle::new("ba2motifs", Task::GraphClassification, graphs, 2, split)
}

fn barabasi_albert_tree<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = vec![(0, 1)];
    // each node appears once per incident edge, so uniform picks are degree-proportional
    let mut endpoints = vec![0, 1];
    for v in 2..n {
        let target = endpoints[rng.random_range(0..endpoints.len())];
        edges.push((target, v));
        endpoints.push(target);
        endpoints.push(v);
    }
    edges
}

/// Homophilous node-classification graph whose labels are recoverable from
/// the features alone: class `c` nodes sit around `2 e_c` with N(0, 0.5²) noise.
/// Each node links to two partners, same-class with probability 0.8.
pub fn generate_feature_clusters(
    num_nodes: usize,
    num_classes: usize,
    feature_dim: usize,
    seed: u64,
) -> Result<DatasetBundle> {
    if num_classes < 2 || feature_dim < num_classes || num_nodes < 2 * num_classes {
        return Err(Error::InvalidParams(format!(
            "need num_classes >= 2, feature_dim >= num_classes and num_nodes >= 2 * num_classes \
             (got {} nodes, {} classes, {} features)",
            num_nodes, num_classes, feature_dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..num_nodes).map(|i| i % num_classes).collect();
    labels.shuffle(&mut rng);
    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    let mut features = DenseMatrix::zeros(num_nodes, feature_dim);
    for (i, &label) in labels.iter().enumerate() {
        for (j, v) in features.row_mut(i).iter_mut().enumerate() {
            *v = noise.sample(&mut rng) + if j == label { 2.0 } else { 0.0 };
        }
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 0..num_nodes {
        for _ in 0..2 {
            let j = if rng.random_bool(0.8) {
                let pool = &by_class[labels[i]];
                pool[rng.random_range(0..pool.len())]
            } else {
                rng.random_range(0..num_nodes)
            };
            if i != j && seen.insert((i.min(j), i.max(j))) {
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut graph = Graph::new(num_nodes, edges, false, features)?;
    graph.node_labels = Some(labels);
    let split = Split::random(num_nodes, &mut rng);
    DatasetBundle::new("feature_clusters", Task::NodeClassification, vec![graph], num_classes, split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_grid_sizes() {
        let d = generate_tree_grid(3, 1, 0).unwrap();
        let g = &d.graphs[0];
        assert_eq!(g.node_count, 16);
        assert_eq!(g.ground_truth_edges.as_ref().unwrap().len(), 12);
        // 6 tree edges, 12 grid edges, 1 attachment
        assert_eq!(g.edges.len(), 19);
        let labels = g.node_labels.as_ref().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 9);
    }

    #[test]
    fn tree_grid_rejects_bad_params() {
        assert!(matches!(generate_tree_grid(3, 0, 0), Err(Error::InvalidParams(_))));
        assert!(matches!(generate_tree_grid(1, 1, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(generate_tree_grid(4, 3, 11).unwrap(), generate_tree_grid(4, 3, 11).unwrap());
        assert_eq!(generate_ba2motifs(6, 8, 11).unwrap(), generate_ba2motifs(6, 8, 11).unwrap());
        assert_ne!(generate_ba2motifs(6, 8, 11).unwrap(), generate_ba2motifs(6, 8, 12).unwrap());
    }

    #[test]
    fn ba2motifs_structure() {
        let d = generate_ba2motifs(10, 20, 7).unwrap();
        assert_eq!(d.graphs.iter().filter(|g| g.graph_label == Some(0)).count(), 5);
        assert_eq!(d.graphs.iter().filter(|g| g.graph_label == Some(1)).count(), 5);
        for g in &d.graphs {
            assert_eq!(g.node_count, 25);
            let motif_edges = g.ground_truth_edges.as_ref().unwrap().len();
            assert_eq!(motif_edges, if g.graph_label == Some(0) { 6 } else { 5 });
            // BA tree (n - 1 edges) + attachment + motif
            assert_eq!(g.edges.len(), 19 + 1 + motif_edges);
            assert_eq!(g.node_features.row(0), &[0.1; 10]);
        }
    }

    #[test]
    fn ba2motifs_rejects_bad_params() {
        assert!(generate_ba2motifs(9, 20, 0).is_err());
        assert!(generate_ba2motifs(10, 4, 0).is_err());
    }

    #[test]
    fn feature_clusters_are_balanced_and_valid() {
        let d = generate_feature_clusters(60, 3, 5, 2).unwrap();
        let labels = d.graphs[0].node_labels.as_ref().unwrap();
        for c in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 20);
        }
        assert!(generate_feature_clusters(60, 3, 2, 2).is_err());
    }
}
