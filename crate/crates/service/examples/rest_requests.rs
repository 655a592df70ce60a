//! Send requests to the REST router in-process, without binding a port.
//!
//! cargo run -p gnnx-service --example rest_requests

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use gnnx_core::graph::generate_tree_grid;
use gnnx_service::http::router;
use gnnx_service::{Api, Registry};
use http_body_util::BodyExt;
use tower::ServiceExt;

async fn send(api: &Api, method: &str, uri: &str, body: &str) -> String {
    let request = Request::builder().method(method).uri(uri).body(Body::from(body.to_owned())).unwrap();
    let response = router(api.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    format!("{} {}", status.as_u16(), String::from_utf8_lossy(&bytes))
}

#[tokio::main]
async fn main() {
    let storage = tempfile::tempdir().unwrap();
    let registry = Registry::new(storage.path());
    let data = generate_tree_grid(3, 2, 0).unwrap();
    std::fs::create_dir_all(storage.path().join("datasets")).unwrap();
    data.save(registry.dataset_path(&data.id)).unwrap();
    let api = Api::new(Arc::new(registry));

    println!("{}", send(&api, "GET", "/api/health", "").await);
    println!("{}", send(&api, "GET", "/api/datasets", "").await);
    println!(
        "{}",
        send(&api, "POST", "/api/explain/node", r#"{"dataset_id":"tree_grid","node_id":7,"top_k":4}"#).await
    );
    println!("{}", send(&api, "POST", "/api/explain/node", r#"{"dataset_id":"tree_grid"}"#).await);
    println!("{}", send(&api, "POST", "/api/explain/node", r#"{"dataset_id":"unknown","node_id":1}"#).await);
}
