//! Example-based explanations: the nearest same-class and different-class
//! graphs in embedding space, each with its own edge-mask explanation.

use serde::{Deserialize, Serialize};

use crate::gnn::{gcn_forward, GcnForward, GcnModel, SelfExplainableGcn};
use crate::graph::{sym_normalized_adjacency, DatasetBundle, Graph, Task};
use crate::nn::{argmax, DenseMatrix};
use crate::structural::{explain_graph, GraphExplanation, SelectionStrategy};
use crate::{Error, Result};

/// Exact (brute-force) search over one embedding per item.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    vectors: DenseMatrix,
    labels: Vec<usize>,
    item_ids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Nearest same-class and different-class items for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborPair {
    pub query_id: usize,
    pub same_class: Neighbor,
    pub diff_class: Neighbor,
}

impl EmbeddingIndex {
    pub fn new(vectors: DenseMatrix, labels: Vec<usize>, item_ids: Vec<usize>) -> Result<Self> {
        if labels.len() != vectors.n_rows() || item_ids.len() != vectors.n_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors, {} labels, {} ids",
                vectors.n_rows(),
                labels.len(),
                item_ids.len()
            )));
        }
        if vectors.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite embedding".into()));
        }
        let mut sorted = item_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("duplicate item id".into()));
        }
        Ok(Self { vectors, labels, item_ids })
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn item_ids(&self) -> &[usize] {
        &self.item_ids
    }

    fn row_of(&self, id: usize) -> Result<usize> {
        self.item_ids.iter().position(|&i| i == id).ok_or(Error::OutOfRange { index: id, bound: self.len() })
    }

    pub fn label_of(&self, id: usize) -> Result<usize> {
        Ok(self.labels[self.row_of(id)?])
    }

    pub fn vector_of(&self, id: usize) -> Result<&[f64]> {
        Ok(self.vectors.row(self.row_of(id)?))
    }

    /// Scans every item once; ties go to the smaller item id.
    pub fn nearest(&self, query_id: usize, metric: Metric) -> Result<NeighborPair> {
        let q = self.row_of(query_id)?;
        let query = self.vectors.row(q);
        let label = self.labels[q];
        let mut same: Option<Neighbor> = None;
        let mut diff: Option<Neighbor> = None;
        for row in 0..self.len() {
            if row == q {
                continue;
            }
            let candidate =
                Neighbor { id: self.item_ids[row], distance: metric.distance(query, self.vectors.row(row)) };
            let slot = if self.labels[row] == label { &mut same } else { &mut diff };
            let better = match slot {
                None => true,
                Some(best) => candidate.distance.total_cmp(&best.distance).then(candidate.id.cmp(&best.id)).is_lt(),
            };
            if better {
                *slot = Some(candidate);
            }
        }
        Ok(NeighborPair {
            query_id,
            same_class: same.ok_or(Error::NoSameClassItem(query_id))?,
            diff_class: diff.ok_or(Error::NoDiffClassItem(query_id))?,
        })
    }
}

/// A graph-level model that can place a whole graph in embedding space.
pub trait GraphEmbedder {
    fn task(&self) -> Task;
    fn feature_dim(&self) -> usize;
    fn embedding_dim(&self) -> usize;
    /// Mean-pooled final-layer node embeddings and the predicted class.
    fn embed(&self, graph: &Graph) -> Result<(Vec<f64>, usize)>;
}

fn pooled(fwd: GcnForward) -> (Vec<f64>, usize) {
    let class = argmax(fwd.logits.row(0));
    (fwd.pooled.expect("graph-level forward pools"), class)
}

impl GraphEmbedder for GcnModel {
    fn task(&self) -> Task {
        GcnModel::task(self)
    }

    fn feature_dim(&self) -> usize {
        GcnModel::feature_dim(self)
    }

    fn embedding_dim(&self) -> usize {
        self.explanation_dim()
    }

    fn embed(&self, graph: &Graph) -> Result<(Vec<f64>, usize)> {
        Ok(pooled(gcn_forward(self, &sym_normalized_adjacency(graph)?, &graph.node_features)?))
    }
}

/// Embeds through the masked forward pass, the one its predictions come from.
impl GraphEmbedder for SelfExplainableGcn {
    fn task(&self) -> Task {
        SelfExplainableGcn::task(self)
    }

    fn feature_dim(&self) -> usize {
        self.base.feature_dim()
    }

    fn embedding_dim(&self) -> usize {
        self.base.explanation_dim()
    }

    fn embed(&self, graph: &Graph) -> Result<(Vec<f64>, usize)> {
        let (_, fwd) = self.predict(&sym_normalized_adjacency(graph)?, &graph.node_features)?;
        Ok(pooled(fwd))
    }
}

/// One embedding per graph, labelled with the model's prediction.
pub fn build_index<M: GraphEmbedder + ?Sized>(model: &M, dataset: &DatasetBundle) -> Result<EmbeddingIndex> {
    if model.task() != Task::GraphClassification || dataset.task != Task::GraphClassification {
        return Err(Error::IncompatibleModel("reference retrieval needs a graph-level model and dataset".into()));
    }
    if model.feature_dim() != dataset.feature_dim() {
        return Err(Error::IncompatibleModel(format!(
            "model expects {} features, dataset has {}",
            model.feature_dim(),
            dataset.feature_dim()
        )));
    }
    let mut rows = Vec::with_capacity(dataset.graphs.len());
    let mut labels = Vec::with_capacity(dataset.graphs.len());
    for g in &dataset.graphs {
        let (row, label) = model.embed(g)?;
        rows.push(row);
        labels.push(label);
    }
    let vectors =
        if rows.is_empty() { DenseMatrix::zeros(0, model.embedding_dim()) } else { DenseMatrix::from_rows(&rows)? };
    EmbeddingIndex::new(vectors, labels, (0..dataset.graphs.len()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    #[serde(flatten)]
    pub explanation: GraphExplanation,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub query_id: usize,
    pub same_class: Reference,
    pub diff_class: Reference,
}

/// Nearest references for `query_id`, each explained by `model` with `strategy`.
pub fn find_references(
    index: &EmbeddingIndex,
    query_id: usize,
    metric: Metric,
    model: &SelfExplainableGcn,
    dataset: &DatasetBundle,
    strategy: SelectionStrategy,
) -> Result<ReferenceSet> {
    let pair = index.nearest(query_id, metric)?;
    let explain = |n: Neighbor| -> Result<Reference> {
        let graph = dataset.graphs.get(n.id).ok_or(Error::OutOfRange { index: n.id, bound: dataset.graphs.len() })?;
        Ok(Reference { explanation: explain_graph(model, graph, n.id, strategy)?, distance: n.distance })
    };
    Ok(ReferenceSet { query_id, same_class: explain(pair.same_class)?, diff_class: explain(pair.diff_class)? })
}
