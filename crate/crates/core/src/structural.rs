//! Structural explanations.
//!
//! Node predictions are explained by a random walk with restart from the
//! target node over the column-normalized adjacency:
//! `r_{t+1} = (1 - d) r_0 + d Â_c r_t`. The top-k nodes by stationary score
//! form the explanation subgraph, and each edge `j -> i` inside it carries
//! the probability inflow `Â_c[i, j] r_j`, rescaled so the inflow into the
//! target sums to one.
//!
//! Graph predictions are explained by the edge mask of a self-explainable GCN.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::gnn::SelfExplainableGcn;
use crate::graph::{
    column_normalized_adjacency, spmv, sym_normalized_adjacency, DatasetBundle, Graph, NormalizationMode,
    NormalizedAdjacency, Task,
};
use crate::nn::{argmax, softmax};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwrConfig {
    /// Keep-going probability.
    pub d: f64,
    pub max_iters: usize,
    /// L1 threshold on successive iterates.
    pub tolerance: f64,
    pub top_k: usize,
}

impl Default for RwrConfig {
    fn default() -> Self {
        Self { d: 0.85, max_iters: 1000, tolerance: 1e-9, top_k: 10 }
    }
}

impl RwrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.d) {
            return Err(Error::InvalidParams(format!("keep-going probability must be in [0, 1), got {}", self.d)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be >= 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParams("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RwrResult {
    pub scores: Vec<f64>,
    pub iterations_used: usize,
    /// L1 distance between the last two iterates.
    pub residual: f64,
    /// False when `max_iters` ran out before the tolerance was met.
    pub converged: bool,
}

/// Iterator over successive RWR iterates `r_1, r_2, ...`; never terminates on its own.
pub struct RwrIterations<'a> {
    adj: &'a NormalizedAdjacency,
    r0: &'a [f64],
    d: f64,
    current: Vec<f64>,
}

impl<'a> RwrIterations<'a> {
    pub fn new(adj: &'a NormalizedAdjacency, r0: &'a [f64], d: f64) -> Result<Self> {
        if adj.mode != NormalizationMode::ColumnNormalized {
            return Err(Error::InvalidParams("random walk with restart needs a column-normalized adjacency".into()));
        }
        if r0.len() != adj.matrix.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "restart vector of length {} for {} nodes",
                r0.len(),
                adj.matrix.n_cols()
            )));
        }
        if r0.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::BadDistribution("restart vector has negative or non-finite entries".into()));
        }
        let total: f64 = r0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadDistribution(format!("restart vector sums to {}", total)));
        }
        Ok(Self { adj, r0, d, current: r0.to_vec() })
    }
}

impl Iterator for RwrIterations<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let walked = spmv(&self.adj.matrix, &self.current).expect("dimensions checked at construction");
        let next: Vec<f64> = walked.iter().zip(self.r0).map(|(w, r)| (1.0 - self.d) * r + self.d * w).collect();
        self.current = next.clone();
        Some(next)
    }
}

/// Power iteration until `‖r_{t+1} - r_t‖₁ <= tolerance` or `max_iters`.
/// Running out of iterations is reported through `converged`, not as an error.
pub fn rwr(adj: &NormalizedAdjacency, r0: &[f64], config: &RwrConfig) -> Result<RwrResult> {
    config.validate()?;
    let mut previous = r0.to_vec();
    let mut result =
        RwrResult { scores: previous.clone(), iterations_used: 0, residual: f64::INFINITY, converged: false };
    for (t, next) in RwrIterations::new(adj, r0, config.d)?.take(config.max_iters).enumerate() {
        let residual: f64 = next.iter().zip(&previous).map(|(a, b)| (a - b).abs()).sum();
        result.iterations_used = t + 1;
        result.residual = residual;
        previous = next;
        if residual <= config.tolerance {
            result.converged = true;
            break;
        }
    }
    result.scores = previous;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredNode {
    pub id: usize,
    pub score: f64,
    /// Undirected hop distance from the target; `None` when unreachable.
    pub hop: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeContribution {
    pub src: usize,
    pub dst: usize,
    pub contribution: f64,
}

/// Explanation subgraph of a node prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExplanation {
    pub target: usize,
    /// Subgraph nodes by descending score, ties by ascending id.
    pub nodes: Vec<ScoredNode>,
    pub edges: Vec<EdgeContribution>,
    pub converged: bool,
    #[serde(skip)]
    pub rwr: RwrResult,
}

impl NodeExplanation {
    pub fn subgraph_nodes(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn score(&self, node: usize) -> Option<f64> {
        self.nodes.iter().find(|n| n.id == node).map(|n| n.score)
    }
}

/// Node ids ordered by descending score, ties by ascending id.
pub fn rank_nodes(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// RWR explanation of `target` over a precomputed column-normalized adjacency of `graph`.
pub fn explain_node(
    graph: &Graph,
    adj: &NormalizedAdjacency,
    target: usize,
    config: &RwrConfig,
) -> Result<NodeExplanation> {
    let n = graph.node_count;
    if target >= n {
        return Err(Error::TargetOutOfRange { target, node_count: n });
    }
    if adj.matrix.n_rows() != n {
        return Err(Error::DimensionMismatch(format!("adjacency has {} rows for {} nodes", adj.matrix.n_rows(), n)));
    }
    let mut r0 = vec![0.0; n];
    r0[target] = 1.0;
    let result = rwr(adj, &r0, config)?;
    let scores = &result.scores;

    let k = config.top_k.min(n);
    let mut selected = vec![target];
    selected.extend(rank_nodes(scores).into_iter().filter(|&v| v != target).take(k - 1));
    let mut ordered = selected.clone();
    ordered.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let in_subgraph: HashSet<usize> = selected.iter().copied().collect();
    let hops = graph.hop_distances(target);
    let nodes = ordered.iter().map(|&id| ScoredNode { id, score: scores[id], hop: hops[id] }).collect();

    let input_edges: HashSet<(usize, usize)> = graph.directed_pairs().into_iter().collect();
    let mut edges: Vec<EdgeContribution> = adj
        .matrix
        .entries()
        .filter(|&(dst, src, _)| in_subgraph.contains(&src) && in_subgraph.contains(&dst))
        .filter(|&(dst, src, _)| input_edges.contains(&(src, dst)))
        .map(|(dst, src, a)| EdgeContribution { src, dst, contribution: a * scores[src] })
        .collect();
    let inflow: f64 = edges.iter().filter(|e| e.dst == target).map(|e| e.contribution).sum();
    if inflow > 0.0 {
        edges.iter_mut().for_each(|e| e.contribution /= inflow);
    }
    Ok(NodeExplanation { target, nodes, edges, converged: result.converged, rwr: result })
}

/// Builds the column-normalized adjacency of `graph` and explains `target`.
pub fn explain_node_in(graph: &Graph, target: usize, config: &RwrConfig) -> Result<NodeExplanation> {
    let adj = column_normalized_adjacency(graph)?;
    explain_node(graph, &adj, target, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStrategy {
    TopK(usize),
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEdge {
    pub src: usize,
    pub dst: usize,
    pub score: f64,
    pub selected: bool,
}

/// Edge-mask explanation of a graph prediction. Edges follow the graph's edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExplanation {
    pub graph_id: usize,
    pub predicted_class: usize,
    pub class_probs: Vec<f64>,
    pub edges: Vec<ScoredEdge>,
}

impl GraphExplanation {
    pub fn edge_scores(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.score).collect()
    }

    pub fn selected_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().filter(|e| e.selected).map(|e| (e.src, e.dst)).collect()
    }
}

/// Indices of the selected scores: the `k` best (ties by index) or all strictly above a threshold.
pub fn select_edges(scores: &[f64], strategy: SelectionStrategy) -> Vec<usize> {
    match strategy {
        SelectionStrategy::TopK(k) => {
            let mut chosen: Vec<usize> = rank_nodes(scores).into_iter().take(k).collect();
            chosen.sort_unstable();
            chosen
        }
        SelectionStrategy::Threshold(t) => (0..scores.len()).filter(|&i| scores[i] > t).collect(),
    }
}

/// Per-edge mask scores: `mean(m_ij, m_ji)` for undirected graphs, `m_ij` for directed ones.
pub fn undirected_edge_scores(graph: &Graph, adj: &NormalizedAdjacency, mask: &[f64]) -> Result<Vec<f64>> {
    let lookup = |i: usize, j: usize| {
        adj.matrix
            .position(i, j)
            .map(|k| mask[k])
            .ok_or_else(|| Error::IncompatibleModel(format!("edge ({}, {}) missing from adjacency", i, j)))
    };
    graph
        .edges
        .iter()
        .map(|&(s, d)| if graph.directed || s == d { lookup(s, d) } else { Ok(0.5 * (lookup(s, d)? + lookup(d, s)?)) })
        .collect()
}

/// Runs the self-explainable model on `graph` and selects edges from its mask.
pub fn explain_graph(
    model: &SelfExplainableGcn,
    graph: &Graph,
    graph_id: usize,
    strategy: SelectionStrategy,
) -> Result<GraphExplanation> {
    if model.task() != Task::GraphClassification {
        return Err(Error::IncompatibleModel("graph explanations need a graph-level model".into()));
    }
    if model.base.feature_dim() != graph.feature_dim() {
        return Err(Error::IncompatibleModel(format!(
            "model expects {} features, graph has {}",
            model.base.feature_dim(),
            graph.feature_dim()
        )));
    }
    let adj = sym_normalized_adjacency(graph)?;
    let (mask, forward) = model.predict(&adj, &graph.node_features)?;
    let scores = undirected_edge_scores(graph, &adj, &mask.values)?;
    let selected: HashSet<usize> = select_edges(&scores, strategy).into_iter().collect();
    let class_probs = softmax(forward.logits.row(0));
    Ok(GraphExplanation {
        graph_id,
        predicted_class: argmax(&class_probs),
        class_probs,
        edges: graph
            .edges
            .iter()
            .zip(&scores)
            .enumerate()
            .map(|(i, (&(src, dst), &score))| ScoredEdge { src, dst, score, selected: selected.contains(&i) })
            .collect(),
    })
}

/// Area under the ROC curve of `scores` against binary `positives`
/// (Mann–Whitney statistic, ties counted as one half).
pub fn roc_auc(scores: &[f64], positives: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(positives).filter(|(_, &p)| p).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(positives).filter(|(_, &p)| !p).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            wins += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

/// How well edge scores single out ground-truth motif edges across a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotifRecovery {
    pub motif_mean: f64,
    pub base_mean: f64,
    pub auc: f64,
    pub accuracy: f64,
}

/// Scores every edge of every graph with `model` and compares motif edges to the rest.
pub fn motif_recovery(model: &SelfExplainableGcn, dataset: &DatasetBundle) -> Result<MotifRecovery> {
    let mut scores = Vec::new();
    let mut positives = Vec::new();
    let mut correct = 0usize;
    for (i, g) in dataset.graphs.iter().enumerate() {
        let e = explain_graph(model, g, i, SelectionStrategy::TopK(0))?;
        if Some(e.predicted_class) == g.graph_label {
            correct += 1;
        }
        for edge in &e.edges {
            scores.push(edge.score);
            positives.push(g.is_ground_truth_edge(edge.src, edge.dst));
        }
    }
    let mean = |want: bool| {
        let chosen: Vec<f64> = scores.iter().zip(&positives).filter(|(_, &p)| p == want).map(|(&s, _)| s).collect();
        chosen.iter().sum::<f64>() / chosen.len() as f64
    };
    let auc = roc_auc(&scores, &positives)
        .ok_or_else(|| Error::InvalidParams("need both motif and base edges to score recovery".into()))?;
    Ok(MotifRecovery {
        motif_mean: mean(true),
        base_mean: mean(false),
        auc,
        accuracy: correct as f64 / dataset.graphs.len() as f64,
    })
}
