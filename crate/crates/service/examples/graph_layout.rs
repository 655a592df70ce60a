//! Registry-backed graph view with a PCA layout of GCN embeddings.
//!
//! cargo run -p gnnx-service --example graph_layout

use std::sync::Arc;

use gnnx_core::gnn::train_gcn;
use gnnx_core::graph::generate_feature_clusters;
use gnnx_core::nn::{CheckpointMeta, TrainConfig};
use gnnx_service::api::GraphViewRequest;
use gnnx_service::{Api, ModelKind, Registry};

fn main() {
    let storage = tempfile::tempdir().unwrap();
    let registry = Registry::new(storage.path());
    let data = generate_feature_clusters(40, 2, 4, 0).unwrap();
    std::fs::create_dir_all(storage.path().join("datasets")).unwrap();
    data.save(registry.dataset_path(&data.id)).unwrap();
    let config = TrainConfig { epochs: 100, ..TrainConfig::default() };
    let (gcn, _) = train_gcn(&data, &config).unwrap();
    let path = registry.model_path(&data.id, ModelKind::Gcn);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    gcn.to_checkpoint(CheckpointMeta::new(0, 100, data.id.clone())).save(path).unwrap();

    let api = Api::new(Arc::new(registry));
    let request = GraphViewRequest { dataset_id: data.id.clone(), graph_id: 0, layout: Some("pca".into()) };
    let view: serde_json::Value = serde_json::from_str(&api.graph_view(&request).unwrap()).unwrap();
    let labels = view["node_labels"].as_array().unwrap();
    for (i, p) in view["layout"]["positions"].as_array().unwrap().iter().enumerate().take(10) {
        println!("node {:>2} class {}  ({:+.3}, {:+.3})", i, labels[i], p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
    }
    println!("file loads: {}", api.registry().file_loads());
}
