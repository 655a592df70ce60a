//! HTTP routes over [`Api`].

use std::collections::HashMap;
use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use crate::api::{parse_body, Api, ApiError, ApiResult, GraphViewRequest, ReferenceRequest, StrategyName};
use crate::schemas;

pub const DEFAULT_PORT: u16 = 8080;

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn respond(result: ApiResult<String>) -> Response {
    match result {
        Ok(body) => json(StatusCode::OK, body),
        Err(e) => json(StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR), e.body()),
    }
}

/// Runs `work` off the async executor; explanations can take a while.
async fn blocking(api: Api, work: impl FnOnce(&Api) -> ApiResult<String> + Send + 'static) -> Response {
    match tokio::task::spawn_blocking(move || work(&api)).await {
        Ok(result) => respond(result),
        Err(e) => respond(Err(ApiError::Internal(e.to_string()))),
    }
}

fn post_route<T>(run: fn(&Api, &T) -> ApiResult<String>) -> axum::routing::MethodRouter<Api>
where
    T: serde::de::DeserializeOwned + Send + 'static,
{
    post(move |State(api): State<Api>, body: Bytes| async move {
        match parse_body::<T>(&body) {
            Ok(req) => blocking(api, move |api| run(api, &req)).await,
            Err(e) => respond(Err(e)),
        }
    })
}

fn path_index(raw: &str, field: &str) -> ApiResult<usize> {
    raw.parse()
        .map_err(|_| ApiError::BadRequest { field: field.to_owned(), message: format!("`{}` is not an index", raw) })
}

fn query_value<T: std::str::FromStr>(query: &HashMap<String, String>, field: &str) -> ApiResult<Option<T>> {
    query
        .get(field)
        .map(|raw| {
            raw.parse().map_err(|_| ApiError::BadRequest {
                field: field.to_owned(),
                message: format!("cannot parse `{}`", raw),
            })
        })
        .transpose()
}

async fn graph_view(
    State(api): State<Api>,
    Path((dataset_id, graph_id)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
) -> Response {
    let req = match path_index(&graph_id, "graph_id") {
        Ok(graph_id) => GraphViewRequest { dataset_id, graph_id, layout: query.get("layout").cloned() },
        Err(e) => return respond(Err(e)),
    };
    blocking(api, move |api| api.graph_view(&req)).await
}

async fn references(
    State(api): State<Api>,
    Path((dataset_id, graph_id)): Path<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
) -> Response {
    let parsed = (|| {
        let strategy = match query.get("strategy").map(String::as_str) {
            None => None,
            Some("top_k") => Some(StrategyName::TopK),
            Some("threshold") => Some(StrategyName::Threshold),
            Some(other) => {
                return Err(ApiError::BadRequest {
                    field: "strategy".into(),
                    message: format!("unknown strategy `{}`", other),
                })
            }
        };
        Ok(ReferenceRequest {
            dataset_id,
            graph_id: path_index(&graph_id, "graph_id")?,
            strategy,
            value: query_value(&query, "value")?,
        })
    })();
    match parsed {
        Ok(req) => blocking(api, move |api| api.references(&req)).await,
        Err(e) => respond(Err(e)),
    }
}

async fn schema(Path(name): Path<String>) -> Response {
    match schemas::by_name(&name) {
        Some(text) => json(StatusCode::OK, text.to_owned()),
        None => respond(Err(ApiError::NotFound(format!("schema `{}`", name)))),
    }
}

pub fn router(api: Api) -> Router {
    Router::new()
        .route("/api/health", get(|State(api): State<Api>| async move { json(StatusCode::OK, api.health()) }))
        .route("/api/datasets", get(|State(api): State<Api>| async move { blocking(api, Api::datasets).await }))
        .route("/api/datasets/{dataset_id}/graph/{graph_id}", get(graph_view))
        .route("/api/explain/node", post_route(Api::explain_node))
        .route("/api/explain/graph", post_route(Api::explain_graph))
        .route("/api/explain/features", post_route(Api::explain_features))
        .route("/api/explain/features/summary", post_route(Api::summarize_features))
        .route("/api/examples/{dataset_id}/{graph_id}", get(references))
        .route("/api/schemas/{name}", get(schema))
        .fallback(|| async { respond(Err(ApiError::NotFound("route".into()))) })
        .with_state(api)
}

pub async fn serve(api: Api, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], port))).await?;
    axum::serve(listener, router(api)).await
}
