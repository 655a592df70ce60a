#![allow(dead_code)]

use std::collections::BTreeSet;

use gnnx_core::graph::{DatasetBundle, Graph, Split, Task};
use gnnx_core::nn::{DenseMatrix, Parameters};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple graph: each unordered pair (or ordered pair when directed) is an edge with probability `p`.
pub fn random_graph(n: usize, p: f64, directed: bool, feature_dim: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || (!directed && j < i) {
                continue;
            }
            if rng.random::<f64>() < p {
                edges.insert((i, j));
            }
        }
    }
    let features = (0..n * feature_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    Graph::new(n, edges.into_iter().collect(), directed, DenseMatrix::from_vec(n, feature_dim, features).unwrap())
        .unwrap()
}

pub fn node_dataset(n: usize, feature_dim: usize, num_classes: usize, rng: &mut impl Rng) -> DatasetBundle {
    let mut g = random_graph(n, 0.5, false, feature_dim, rng);
    g.node_labels = Some((0..n).map(|_| rng.random_range(0..num_classes)).collect());
    let split = Split { train: (0..n).collect(), val: vec![], test: vec![] };
    DatasetBundle::new("random_nodes", Task::NodeClassification, vec![g], num_classes, split).unwrap()
}

pub fn graph_dataset(
    num_graphs: usize,
    n: usize,
    feature_dim: usize,
    num_classes: usize,
    rng: &mut impl Rng,
) -> DatasetBundle {
    let graphs = (0..num_graphs)
        .map(|_| {
            let mut g = random_graph(n, 0.6, false, feature_dim, rng);
            g.graph_label = Some(rng.random_range(0..num_classes));
            g
        })
        .collect();
    let split = Split { train: (0..num_graphs).collect(), val: vec![], test: vec![] };
    DatasetBundle::new("random_graphs", Task::GraphClassification, graphs, num_classes, split).unwrap()
}

/// Largest relative error between analytic gradients and central differences of `loss`.
///
/// Relative error is |a - n| / max(|a|, |n|); pairs where both are below
/// `1e-7` are compared absolutely instead.
pub fn max_gradient_error<P, G>(params: &P, grads: &G, loss: impl Fn(&P) -> f64) -> f64
where
    P: Parameters + Clone,
    G: Parameters,
{
    let h = 1e-5;
    let analytic: Vec<f64> = grads.tensors().into_iter().flat_map(|t| t.to_vec()).collect();
    let mut worst = 0.0f64;
    let mut flat = 0usize;
    let n_tensors = params.tensors().len();
    for t in 0..n_tensors {
        let len = params.tensors()[t].len();
        for i in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            let a = analytic[flat];
            let scale = a.abs().max(numeric.abs());
            let err = if scale < 1e-7 { (a - numeric).abs() } else { (a - numeric).abs() / scale };
            worst = worst.max(err);
            flat += 1;
        }
    }
    worst
}
