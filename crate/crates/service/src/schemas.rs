//! JSON schemas of every response body, served under `/api/schemas/{name}`.

pub const NODE_EXPLANATION: &str = include_str!("../schemas/node_explanation.json");
pub const GRAPH_EXPLANATION: &str = include_str!("../schemas/graph_explanation.json");
pub const FEATURE_ATTRIBUTION: &str = include_str!("../schemas/feature_attribution.json");
pub const ATTRIBUTION_SUMMARY: &str = include_str!("../schemas/attribution_summary.json");
pub const REFERENCE_SET: &str = include_str!("../schemas/reference_set.json");
pub const DATASETS: &str = include_str!("../schemas/datasets.json");
pub const GRAPH_VIEW: &str = include_str!("../schemas/graph_view.json");
pub const HEALTH: &str = include_str!("../schemas/health.json");
pub const ERROR: &str = include_str!("../schemas/error.json");

pub const ALL: [(&str, &str); 9] = [
    ("node_explanation", NODE_EXPLANATION),
    ("graph_explanation", GRAPH_EXPLANATION),
    ("feature_attribution", FEATURE_ATTRIBUTION),
    ("attribution_summary", ATTRIBUTION_SUMMARY),
    ("reference_set", REFERENCE_SET),
    ("datasets", DATASETS),
    ("graph_view", GRAPH_VIEW),
    ("health", HEALTH),
    ("error", ERROR),
];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
