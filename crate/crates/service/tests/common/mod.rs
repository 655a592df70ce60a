#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use gnnx_core::distill::{distill_mlp, DEFAULT_TEMPERATURE};
use gnnx_core::gnn::{train_gcn, train_self_explainable, DEFAULT_SPARSITY_WEIGHT};
use gnnx_core::graph::{generate_ba2motifs, generate_feature_clusters, generate_tree_grid, DatasetBundle};
use gnnx_core::nn::{Checkpoint, CheckpointMeta, TrainConfig};
use gnnx_service::http::router;
use gnnx_service::{schemas, Api, ModelKind, Registry};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const TREE: &str = "tree_grid";
pub const CLUSTERS: &str = "clusters";
pub const BA: &str = "ba2motifs";

fn save_model(registry: &Registry, id: &str, kind: ModelKind, ckpt: Checkpoint) {
    let path = registry.model_path(id, kind);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    ckpt.save(path).unwrap();
}

fn save_dataset(registry: &Registry, mut data: DatasetBundle, id: &str) -> DatasetBundle {
    data.id = id.to_owned();
    let path = registry.dataset_path(id);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    data.save(path).unwrap();
    data
}

/// Writes one node-level dataset with a GCN and a surrogate, one without models,
/// and one graph-level dataset with a GCN and a self-explainable model.
pub fn build_storage(root: &Path) {
    let registry = Registry::new(root);
    let cfg = |epochs| TrainConfig { epochs, learning_rate: 0.01, seed: 3, ..TrainConfig::default() };

    let tree = save_dataset(&registry, generate_tree_grid(3, 2, 0).unwrap(), TREE);
    let (gcn, _) = train_gcn(&tree, &cfg(20)).unwrap();
    save_model(&registry, TREE, ModelKind::Gcn, gcn.to_checkpoint(CheckpointMeta::new(3, 20, TREE)));

    let clusters = save_dataset(&registry, generate_feature_clusters(60, 2, 4, 0).unwrap(), CLUSTERS);
    let (gcn, _) = train_gcn(&clusters, &cfg(100)).unwrap();
    save_model(&registry, CLUSTERS, ModelKind::Gcn, gcn.to_checkpoint(CheckpointMeta::new(3, 100, CLUSTERS)));
    let surrogate = distill_mlp(&gcn, &clusters, &cfg(100), DEFAULT_TEMPERATURE).unwrap();
    save_model(&registry, CLUSTERS, ModelKind::Surrogate, surrogate.to_checkpoint(3, 100));

    let ba = save_dataset(&registry, generate_ba2motifs(50, 20, 7).unwrap(), BA);
    let (gcn, _) = train_gcn(&ba, &cfg(300)).unwrap();
    save_model(&registry, BA, ModelKind::Gcn, gcn.to_checkpoint(CheckpointMeta::new(3, 300, BA)));
    let se = train_self_explainable(&gcn, &ba, &cfg(300), DEFAULT_SPARSITY_WEIGHT).unwrap();
    save_model(&registry, BA, ModelKind::SelfExplainable, se.to_checkpoint(CheckpointMeta::new(3, 300, BA)));
}

/// Storage shared by every test in one test binary.
pub fn storage() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        build_storage(dir.path());
        dir
    })
    .path()
}

pub fn api(root: impl Into<PathBuf>) -> Api {
    Api::new(Arc::new(Registry::new(root)))
}

pub async fn call(api: &Api, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_owned())))
        .unwrap();
    let response = router(api.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

pub async fn get(api: &Api, uri: &str) -> (StatusCode, String) {
    call(api, Method::GET, uri, None).await
}

pub async fn post(api: &Api, uri: &str, body: &str) -> (StatusCode, String) {
    call(api, Method::POST, uri, Some(body)).await
}

/// Validation errors of `body` against the named schema; empty when valid.
pub fn schema_errors(name: &str, body: &str) -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(schemas::by_name(name).unwrap()).unwrap();
    let instance: serde_json::Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(e) => return vec![format!("not JSON: {}", e)],
    };
    let validator = jsonschema::validator_for(&schema).unwrap();
    validator.iter_errors(&instance).map(|e| format!("{} at {}", e, e.instance_path())).collect()
}

pub fn assert_schema(name: &str, body: &str) {
    let errors = schema_errors(name, body);
    assert!(errors.is_empty(), "{} does not match schema `{}`: {:?}", body, name, errors);
}
