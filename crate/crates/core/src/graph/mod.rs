//! Graphs, sparse adjacency algebra, normalizations and synthetic benchmarks.

mod generate;
mod io;
mod normalize;
mod sparse;

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::nn::DenseMatrix;
use crate::{Error, Result};

pub use generate::{generate_ba2motifs, generate_feature_clusters, generate_tree_grid};
pub use io::DatasetFile;
pub use normalize::{column_normalized_adjacency, sym_normalized_adjacency, NormalizationMode, NormalizedAdjacency};
pub use sparse::{build_csr, spmv, SparseMatrix};

/// An attributed graph. Undirected graphs list each edge once; adjacency
/// construction expands them into both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    pub directed: bool,
    pub node_features: DenseMatrix,
    pub node_labels: Option<Vec<usize>>,
    pub graph_label: Option<usize>,
    /// Edges known to form the explanatory motif, when the generator records them.
    pub ground_truth_edges: Option<Vec<(usize, usize)>>,
}

impl Graph {
    pub fn new(
        node_count: usize,
        edges: Vec<(usize, usize)>,
        directed: bool,
        node_features: DenseMatrix,
    ) -> Result<Self> {
        let g = Self {
            node_count,
            edges,
            directed,
            node_features,
            node_labels: None,
            graph_label: None,
            ground_truth_edges: None,
        };
        g.validate(None)?;
        Ok(g)
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.n_cols()
    }

    /// Checks structural invariants; labels are range-checked when `num_classes` is given.
    pub fn validate(&self, num_classes: Option<usize>) -> Result<()> {
        if self.node_features.n_rows() != self.node_count {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for {} nodes",
                self.node_features.n_rows(),
                self.node_count
            )));
        }
        build_csr(&self.directed_pairs(), self.node_count, self.node_count, None)?;
        if let Some(labels) = &self.node_labels {
            if labels.len() != self.node_count {
                return Err(Error::DimensionMismatch(format!(
                    "{} node labels for {} nodes",
                    labels.len(),
                    self.node_count
                )));
            }
            if let (Some(c), Some(&bad)) = (num_classes, labels.iter().find(|&&l| Some(l) >= num_classes)) {
                return Err(Error::OutOfRange { index: bad, bound: c });
            }
        }
        if let (Some(c), Some(l)) = (num_classes, self.graph_label) {
            if l >= c {
                return Err(Error::OutOfRange { index: l, bound: c });
            }
        }
        if let Some(gt) = &self.ground_truth_edges {
            let edges: HashSet<(usize, usize)> = self.directed_pairs().into_iter().collect();
            if let Some(&(s, d)) = gt.iter().find(|e| !edges.contains(e)) {
                return Err(Error::InvalidParams(format!("ground-truth edge ({}, {}) is not a graph edge", s, d)));
            }
        }
        Ok(())
    }

    /// Directed pairs backing the adjacency: both directions for undirected graphs.
    pub fn directed_pairs(&self) -> Vec<(usize, usize)> {
        if self.directed {
            return self.edges.clone();
        }
        let mut pairs = Vec::with_capacity(2 * self.edges.len());
        for &(s, d) in &self.edges {
            pairs.push((s, d));
            if s != d {
                pairs.push((d, s));
            }
        }
        pairs
    }

    /// Unweighted adjacency with rows as sources.
    pub fn adjacency(&self) -> Result<SparseMatrix> {
        build_csr(&self.directed_pairs(), self.node_count, self.node_count, None)
    }

    /// Breadth-first hop distances from `source`, ignoring edge direction.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut neighbors = vec![Vec::new(); self.node_count];
        for &(s, d) in &self.edges {
            neighbors[s].push(d);
            neighbors[d].push(s);
        }
        let mut dist = vec![None; self.node_count];
        if source >= self.node_count {
            return dist;
        }
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Whether the undirected edge `{s, d}` is part of the recorded ground truth.
    pub fn is_ground_truth_edge(&self, s: usize, d: usize) -> bool {
        self.ground_truth_edges
            .as_ref()
            .is_some_and(|gt| gt.iter().any(|&e| e == (s, d) || (!self.directed && e == (d, s))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    NodeClassification,
    GraphClassification,
}

/// Train/validation/test indices: node ids for node tasks, graph ids for graph tasks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Shuffled 80/10/10 split of `0..n`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Split {
        use rand::seq::SliceRandom;
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(rng);
        let n_train = (n * 8).div_ceil(10);
        let n_val = (n - n_train) / 2;
        let mut train = ids[..n_train].to_vec();
        let mut val = ids[n_train..n_train + n_val].to_vec();
        let mut test = ids[n_train + n_val..].to_vec();
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Split { train, val, test }
    }

    pub fn parts(&self) -> [(&'static str, &[usize]); 3] {
        [("train", &self.train), ("val", &self.val), ("test", &self.test)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub id: String,
    pub task: Task,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub split: Split,
}

impl DatasetBundle {
    pub fn new(
        id: impl Into<String>,
        task: Task,
        graphs: Vec<Graph>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        let bundle = Self { id: id.into(), task, graphs, num_classes, split };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 {
            return Err(Error::InvalidParams("num_classes must be >= 1".into()));
        }
        let dim = self.graphs.first().map_or(0, Graph::feature_dim);
        for g in &self.graphs {
            g.validate(Some(self.num_classes))?;
            if g.feature_dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "graphs disagree on feature dim ({} vs {})",
                    g.feature_dim(),
                    dim
                )));
            }
        }
        let item_count = match self.task {
            Task::NodeClassification => {
                if self.graphs.len() != 1 {
                    return Err(Error::InvalidParams(format!(
                        "node classification needs exactly one graph, got {}",
                        self.graphs.len()
                    )));
                }
                if self.graphs[0].node_labels.is_none() {
                    return Err(Error::InvalidParams("node classification graph has no node labels".into()));
                }
                self.graphs[0].node_count
            }
            Task::GraphClassification => {
                if let Some(i) = self.graphs.iter().position(|g| g.graph_label.is_none()) {
                    return Err(Error::InvalidParams(format!("graph {} has no graph label", i)));
                }
                self.graphs.len()
            }
        };
        let mut seen = HashSet::new();
        for (name, ids) in self.split.parts() {
            for &i in ids {
                if i >= item_count {
                    return Err(Error::OutOfRange { index: i, bound: item_count });
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidParams(format!("index {} appears twice in the split ({})", i, name)));
                }
            }
        }
        Ok(())
    }

    pub fn feature_dim(&self) -> usize {
        self.graphs.first().map_or(0, Graph::feature_dim)
    }

    /// Number of classifiable items: nodes for node tasks, graphs for graph tasks.
    pub fn item_count(&self) -> usize {
        match self.task {
            Task::NodeClassification => self.graphs[0].node_count,
            Task::GraphClassification => self.graphs.len(),
        }
    }

    /// Ground-truth label of item `i`.
    pub fn label(&self, i: usize) -> usize {
        match self.task {
            Task::NodeClassification => self.graphs[0].node_labels.as_ref().expect("validated")[i],
            Task::GraphClassification => self.graphs[i].graph_label.expect("validated"),
        }
    }

    /// Mean feature vector over the training items' nodes (all nodes if the split is empty).
    pub fn train_feature_mean(&self) -> Vec<f64> {
        let dim = self.feature_dim();
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        let mut add = |g: &Graph, node: usize| {
            for (s, v) in sum.iter_mut().zip(g.node_features.row(node)) {
                *s += v;
            }
            count += 1;
        };
        match self.task {
            Task::NodeClassification => {
                let g = &self.graphs[0];
                if self.split.train.is_empty() {
                    (0..g.node_count).for_each(|n| add(g, n));
                } else {
                    self.split.train.iter().for_each(|&n| add(g, n));
                }
            }
            Task::GraphClassification => {
                let ids: Vec<usize> = if self.split.train.is_empty() {
                    (0..self.graphs.len()).collect()
                } else {
                    self.split.train.clone()
                };
                for gi in ids {
                    let g = &self.graphs[gi];
                    (0..g.node_count).for_each(|n| add(g, n));
                }
            }
        }
        sum.into_iter().map(|s| s / count.max(1) as f64).collect()
    }
}
