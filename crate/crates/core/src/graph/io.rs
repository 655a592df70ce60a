//! JSON dataset files.
//!
//! ```json
//! {"task": "graph_classification", "num_classes": 2,
//!  "graphs": [{"num_nodes": 3, "edges": [[0, 1], [1, 2]], "directed": false,
//!              "features": [[0.1], [0.1], [0.1]], "graph_label": 1}],
//!  "split": {"train": [0], "val": [], "test": []}}
//! ```
//!
//! The dataset id is not stored in the file; it is the file stem.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Graph, Split, Task};
use crate::nn::DenseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub task: Task,
    pub num_classes: usize,
    pub graphs: Vec<GraphRecord>,
    pub split: Split,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub num_nodes: usize,
    pub edges: Vec<[usize; 2]>,
    pub directed: bool,
    pub features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_label: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_edges: Option<Vec<[usize; 2]>>,
}

fn pairs(edges: &[[usize; 2]]) -> Vec<(usize, usize)> {
    edges.iter().map(|&[s, d]| (s, d)).collect()
}

fn arrays(edges: &[(usize, usize)]) -> Vec<[usize; 2]> {
    edges.iter().map(|&(s, d)| [s, d]).collect()
}

impl From<&Graph> for GraphRecord {
    fn from(g: &Graph) -> Self {
        Self {
            num_nodes: g.node_count,
            edges: arrays(&g.edges),
            directed: g.directed,
            features: g.node_features.to_rows(),
            node_labels: g.node_labels.clone(),
            graph_label: g.graph_label,
            ground_truth_edges: g.ground_truth_edges.as_deref().map(arrays),
        }
    }
}

impl GraphRecord {
    fn into_graph(self) -> Result<Graph> {
        let features =
            if self.features.is_empty() { DenseMatrix::zeros(0, 0) } else { DenseMatrix::from_rows(&self.features)? };
        Ok(Graph {
            node_count: self.num_nodes,
            edges: pairs(&self.edges),
            directed: self.directed,
            node_features: features,
            node_labels: self.node_labels,
            graph_label: self.graph_label,
            ground_truth_edges: self.ground_truth_edges.as_deref().map(pairs),
        })
    }
}

impl DatasetBundle {
    pub fn to_file(&self) -> DatasetFile {
        DatasetFile {
            task: self.task,
            num_classes: self.num_classes,
            graphs: self.graphs.iter().map(GraphRecord::from).collect(),
            split: self.split.clone(),
        }
    }

    pub fn from_file(id: impl Into<String>, file: DatasetFile) -> Result<Self> {
        let graphs = file.graphs.into_iter().map(GraphRecord::into_graph).collect::<Result<Vec<_>>>()?;
        DatasetBundle::new(id, file.task, graphs, file.num_classes, file.split)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("dataset serialisation cannot fail")
    }

    pub fn from_json(id: impl Into<String>, text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        Self::from_file(id, file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(parent) = path.as_ref().parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Loads a dataset file; the id is taken from the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Parse(format!("cannot derive a dataset id from {}", path.display())))?;
        Self::from_json(id, &std::fs::read_to_string(path)?)
    }
}
