//! Request handling shared by the HTTP routes and the command line.
//!
//! Every operation returns the serialized response body, so both front ends
//! emit the same bytes for the same inputs.

use std::sync::Arc;

use gnnx_core::attribution::{explain_node_features, summarize_attributions, DEFAULT_N_SAMPLES, DEFAULT_SEED};
use gnnx_core::graph::{DatasetBundle, Graph, Task};
use gnnx_core::reference::{find_references, Metric};
use gnnx_core::structural::{explain_graph, explain_node_in, RwrConfig, SelectionStrategy};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::layout::{layout_embeddings, LayoutResult};
use crate::registry::{Registry, RegistryError};

/// Edges selected for reference explanations when the request names no strategy.
pub const DEFAULT_REFERENCE_TOP_K: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ApiError {
    #[error("invalid `{field}`: {message}")]
    BadRequest { field: String, message: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{0}")]
    Unprocessable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
}

impl ApiError {
    fn bad(field: &str, message: impl Into<String>) -> Self {
        ApiError::BadRequest { field: field.to_owned(), message: message.into() }
    }

    pub fn status(&self) -> u16 {
        match self {
            ApiError::BadRequest { .. } => 400,
            ApiError::NotFound(_) => 404,
            ApiError::Unprocessable(_) => 422,
            ApiError::Internal(_) => 500,
        }
    }

    /// Response body. Not-found and internal errors carry no detail.
    pub fn body(&self) -> String {
        let body = match self {
            ApiError::BadRequest { field, message } => {
                ErrorBody { error: "bad_request", field: Some(field), message: Some(message) }
            }
            ApiError::NotFound(_) => ErrorBody { error: "not_found", field: None, message: None },
            ApiError::Unprocessable(message) => {
                ErrorBody { error: "unprocessable", field: None, message: Some(message) }
            }
            ApiError::Internal(_) => ErrorBody { error: "internal", field: None, message: None },
        };
        serde_json::to_string(&body).expect("error body serializes")
    }
}

impl From<gnnx_core::Error> for ApiError {
    fn from(e: gnnx_core::Error) -> Self {
        use gnnx_core::Error::*;
        match e {
            Parse(_) | Io(_) => ApiError::Internal(e.to_string()),
            other => ApiError::Unprocessable(other.to_string()),
        }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::NotFound(what) => ApiError::NotFound(what),
            RegistryError::Load { .. } => ApiError::Internal(e.to_string()),
            RegistryError::Core(core) => core.into(),
        }
    }
}

pub type ApiResult<T> = std::result::Result<T, ApiError>;

/// Parses a JSON request body, naming the offending field on failure.
pub fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let message = err.inner().to_string();
        let field = if path != "." {
            path
        } else {
            message.split('`').nth(1).map(str::to_owned).unwrap_or_else(|| "body".to_owned())
        };
        ApiError::BadRequest { field, message }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    TopK,
    Threshold,
}

fn strategy(name: StrategyName, value: f64) -> ApiResult<SelectionStrategy> {
    if !value.is_finite() {
        return Err(ApiError::bad("value", "must be a finite number"));
    }
    match name {
        StrategyName::TopK if value >= 0.0 && value.fract() == 0.0 => Ok(SelectionStrategy::TopK(value as usize)),
        StrategyName::TopK => Err(ApiError::bad("value", "top_k needs a non-negative integer")),
        StrategyName::Threshold => Ok(SelectionStrategy::Threshold(value)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRequest {
    pub dataset_id: String,
    pub node_id: usize,
    /// Graph holding the node; only meaningful for graph-level datasets.
    #[serde(default)]
    pub graph_id: Option<usize>,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRequest {
    pub dataset_id: String,
    pub graph_id: usize,
    pub strategy: StrategyName,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRequest {
    pub dataset_id: String,
    pub node_id: usize,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRequest {
    pub dataset_id: String,
    /// Defaults to the test split, or every node when the split is empty.
    #[serde(default)]
    pub sample_ids: Option<Vec<usize>>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRequest {
    pub dataset_id: String,
    pub graph_id: usize,
    #[serde(default)]
    pub strategy: Option<StrategyName>,
    #[serde(default)]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphViewRequest {
    pub dataset_id: String,
    pub graph_id: usize,
    #[serde(default)]
    pub layout: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub task: Task,
    pub num_classes: usize,
    pub num_graphs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphView {
    pub dataset_id: String,
    pub graph_id: usize,
    pub num_nodes: usize,
    pub directed: bool,
    pub edges: Vec<[usize; 2]>,
    pub node_labels: Option<Vec<usize>>,
    pub graph_label: Option<usize>,
    pub layout: Option<LayoutResult>,
}

fn to_json<T: Serialize>(value: &T) -> ApiResult<String> {
    serde_json::to_string(value).map_err(|e| ApiError::Internal(e.to_string()))
}

/// Graph `graph_id` of a dataset; out-of-range ids in URL paths are not found.
fn graph_resource(dataset: &DatasetBundle, graph_id: usize) -> ApiResult<&Graph> {
    dataset.graphs.get(graph_id).ok_or_else(|| ApiError::NotFound(format!("graph {} of `{}`", graph_id, dataset.id)))
}

fn graph_argument(dataset: &DatasetBundle, graph_id: usize) -> ApiResult<&Graph> {
    dataset.graphs.get(graph_id).ok_or_else(|| {
        ApiError::Unprocessable(format!("graph {} out of range for {} graphs", graph_id, dataset.graphs.len()))
    })
}

#[derive(Clone)]
pub struct Api {
    registry: Arc<Registry>,
}

impl Api {
    pub fn new(registry: Arc<Registry>) -> Self {
        Self { registry }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn health(&self) -> String {
        r#"{"status":"ok"}"#.to_owned()
    }

    pub fn datasets(&self) -> ApiResult<String> {
        let mut out = Vec::new();
        for id in self.registry.dataset_ids()? {
            let d = self.registry.dataset(&id)?;
            out.push(DatasetSummary { id, task: d.task, num_classes: d.num_classes, num_graphs: d.graphs.len() });
        }
        to_json(&out)
    }

    pub fn graph_view(&self, req: &GraphViewRequest) -> ApiResult<String> {
        let dataset = self.registry.dataset(&req.dataset_id)?;
        let graph = graph_resource(&dataset, req.graph_id)?;
        let layout = match req.layout.as_deref() {
            None => None,
            Some("pca") => Some(layout_embeddings(&*self.registry.gcn(&req.dataset_id)?, graph)?),
            Some(other) => return Err(ApiError::bad("layout", format!("unknown layout `{}`, expected `pca`", other))),
        };
        to_json(&GraphView {
            dataset_id: req.dataset_id.clone(),
            graph_id: req.graph_id,
            num_nodes: graph.node_count,
            directed: graph.directed,
            edges: graph.edges.iter().map(|&(s, d)| [s, d]).collect(),
            node_labels: graph.node_labels.clone(),
            graph_label: graph.graph_label,
            layout,
        })
    }

    pub fn explain_node(&self, req: &NodeRequest) -> ApiResult<String> {
        let mut config = RwrConfig::default();
        if let Some(k) = req.top_k {
            if k == 0 {
                return Err(ApiError::bad("top_k", "must be at least 1"));
            }
            config.top_k = k;
        }
        if let Some(d) = req.d {
            if !(0.0..1.0).contains(&d) {
                return Err(ApiError::bad("d", "must be in [0, 1)"));
            }
            config.d = d;
        }
        let dataset = self.registry.dataset(&req.dataset_id)?;
        let graph = graph_argument(&dataset, req.graph_id.unwrap_or(0))?;
        to_json(&explain_node_in(graph, req.node_id, &config)?)
    }

    pub fn explain_graph(&self, req: &GraphRequest) -> ApiResult<String> {
        let strategy = strategy(req.strategy, req.value)?;
        let dataset = self.registry.dataset(&req.dataset_id)?;
        let graph = graph_argument(&dataset, req.graph_id)?;
        let model = self.registry.self_explainable(&req.dataset_id)?;
        to_json(&explain_graph(&model, graph, req.graph_id, strategy)?)
    }

    pub fn explain_features(&self, req: &FeatureRequest) -> ApiResult<String> {
        let dataset = self.registry.dataset(&req.dataset_id)?;
        let surrogate = self.registry.surrogate(&req.dataset_id)?;
        let n_samples = req.n_samples.unwrap_or(DEFAULT_N_SAMPLES);
        to_json(&explain_node_features(&surrogate, &dataset, req.node_id, n_samples, req.seed.unwrap_or(DEFAULT_SEED))?)
    }

    pub fn summarize_features(&self, req: &SummaryRequest) -> ApiResult<String> {
        let dataset = self.registry.dataset(&req.dataset_id)?;
        let surrogate = self.registry.surrogate(&req.dataset_id)?;
        let ids = match &req.sample_ids {
            Some(ids) => ids.clone(),
            None if dataset.split.test.is_empty() => (0..dataset.item_count()).collect(),
            None => dataset.split.test.clone(),
        };
        let n_samples = req.n_samples.unwrap_or(DEFAULT_N_SAMPLES);
        to_json(&summarize_attributions(&surrogate, &dataset, &ids, n_samples, req.seed.unwrap_or(DEFAULT_SEED))?)
    }

    pub fn references(&self, req: &ReferenceRequest) -> ApiResult<String> {
        let strategy = match (req.strategy, req.value) {
            (None, None) => SelectionStrategy::TopK(DEFAULT_REFERENCE_TOP_K),
            (Some(name), Some(value)) => strategy(name, value)?,
            (None, Some(_)) => return Err(ApiError::bad("strategy", "required when `value` is given")),
            (Some(_), None) => return Err(ApiError::bad("value", "required when `strategy` is given")),
        };
        let dataset = self.registry.dataset(&req.dataset_id)?;
        graph_resource(&dataset, req.graph_id)?;
        let model = self.registry.self_explainable(&req.dataset_id)?;
        let index = self.registry.reference_index(&req.dataset_id)?;
        to_json(&find_references(&index, req.graph_id, Metric::Euclidean, &model, &dataset, strategy)?)
    }
}
