use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (bound {bound})")]
    OutOfRange { index: usize, bound: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("edge mask has {got} entries, adjacency stores {expected}")]
    MisalignedMask { expected: usize, got: usize },
    #[error("not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("target node {target} out of range ({node_count} nodes)")]
    TargetOutOfRange { target: usize, node_count: usize },
    #[error("incompatible model: {0}")]
    IncompatibleModel(String),
    #[error("dataset mismatch: {0}")]
    DatasetMismatch(String),
    #[error("exact Shapley enumeration supports at most 16 features, got {0}")]
    TooManyFeatures(usize),
    #[error("kernel SHAP needs at least {required} samples, got {n_samples}")]
    TooFewSamples { n_samples: usize, required: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("no other item with the same class as item {0}")]
    NoSameClassItem(usize),
    #[error("no item with a different class from item {0}")]
    NoDiffClassItem(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
