//! File-backed registry of datasets and trained models.
//!
//! Layout under the storage root:
//!
//! ```text
//! datasets/{dataset_id}.json
//! models/{dataset_id}/gcn.json
//! models/{dataset_id}/self_explainable_gcn.json
//! models/{dataset_id}/mlp_surrogate.json
//! ```
//!
//! Every entry is read from disk at most once per registry; concurrent
//! callers asking for the same entry wait for the single load in flight.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use gnnx_core::distill::SurrogateBundle;
use gnnx_core::gnn::{GcnModel, SelfExplainableGcn};
use gnnx_core::graph::DatasetBundle;
use gnnx_core::nn::Checkpoint;
use gnnx_core::reference::{build_index, EmbeddingIndex};
use once_cell::sync::OnceCell;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("{path}: {source}")]
    Load { path: String, source: gnnx_core::Error },
    #[error(transparent)]
    Core(#[from] gnnx_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Gcn,
    SelfExplainable,
    Surrogate,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gcn, ModelKind::SelfExplainable, ModelKind::Surrogate];

    pub fn file_stem(self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::SelfExplainable => "self_explainable_gcn",
            ModelKind::Surrogate => "mlp_surrogate",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

type Slot<T> = Arc<OnceCell<Arc<T>>>;

struct Cache<K, T> {
    slots: Mutex<HashMap<K, Slot<T>>>,
}

impl<K: Eq + Hash + Clone, T> Cache<K, T> {
    fn new() -> Self {
        Self { slots: Mutex::new(HashMap::new()) }
    }

    fn get_or_load<E>(&self, key: &K, load: impl FnOnce() -> Result<T, E>) -> Result<Arc<T>, E> {
        let slot = self.slots.lock().expect("registry lock poisoned").entry(key.clone()).or_default().clone();
        slot.get_or_try_init(|| load().map(Arc::new)).cloned()
    }
}

pub struct Registry {
    root: PathBuf,
    datasets: Cache<String, DatasetBundle>,
    gcns: Cache<String, GcnModel>,
    self_explainable: Cache<String, SelfExplainableGcn>,
    surrogates: Cache<String, SurrogateBundle>,
    indexes: Cache<String, EmbeddingIndex>,
    file_loads: AtomicUsize,
}

/// Ids become file names, so only a conservative character set is accepted.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Registry {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            datasets: Cache::new(),
            gcns: Cache::new(),
            self_explainable: Cache::new(),
            surrogates: Cache::new(),
            indexes: Cache::new(),
            file_loads: AtomicUsize::new(0),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dataset_path(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{}.json", id))
    }

    pub fn model_path(&self, dataset_id: &str, kind: ModelKind) -> PathBuf {
        self.root.join("models").join(dataset_id).join(format!("{}.json", kind.file_stem()))
    }

    /// Number of files read so far.
    pub fn file_loads(&self) -> usize {
        self.file_loads.load(Ordering::SeqCst)
    }

    fn checked_path(&self, id: &str, path: PathBuf) -> Result<PathBuf, RegistryError> {
        if !is_valid_id(id) || !path.is_file() {
            return Err(RegistryError::NotFound(path.display().to_string()));
        }
        Ok(path)
    }

    fn read<T>(&self, path: &Path, parse: impl FnOnce(&str) -> gnnx_core::Result<T>) -> Result<T, RegistryError> {
        let load_err = |source| RegistryError::Load { path: path.display().to_string(), source };
        self.file_loads.fetch_add(1, Ordering::SeqCst);
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.into()))?;
        parse(&text).map_err(load_err)
    }

    /// Dataset ids with a file under `datasets/`, sorted.
    pub fn dataset_ids(&self) -> Result<Vec<String>, RegistryError> {
        let dir = self.root.join("datasets");
        let entries = match std::fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(RegistryError::Core(e.into())),
        };
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_owned))
            .filter(|id| is_valid_id(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<DatasetBundle>, RegistryError> {
        let path = self.checked_path(id, self.dataset_path(id))?;
        self.datasets.get_or_load(&id.to_owned(), || self.read(&path, |text| DatasetBundle::from_json(id, text)))
    }

    fn checkpoint(&self, dataset_id: &str, kind: ModelKind) -> Result<(PathBuf, Checkpoint), RegistryError> {
        let path = self.checked_path(dataset_id, self.model_path(dataset_id, kind))?;
        let ckpt = self.read(&path, Checkpoint::from_json)?;
        Ok((path, ckpt))
    }

    fn model<T>(
        &self,
        cache: &Cache<String, T>,
        dataset_id: &str,
        kind: ModelKind,
        decode: impl FnOnce(&Checkpoint) -> gnnx_core::Result<T>,
    ) -> Result<Arc<T>, RegistryError> {
        cache.get_or_load(&dataset_id.to_owned(), || {
            let (path, ckpt) = self.checkpoint(dataset_id, kind)?;
            decode(&ckpt).map_err(|source| RegistryError::Load { path: path.display().to_string(), source })
        })
    }

    pub fn gcn(&self, dataset_id: &str) -> Result<Arc<GcnModel>, RegistryError> {
        self.model(&self.gcns, dataset_id, ModelKind::Gcn, GcnModel::from_checkpoint)
    }

    pub fn self_explainable(&self, dataset_id: &str) -> Result<Arc<SelfExplainableGcn>, RegistryError> {
        self.model(&self.self_explainable, dataset_id, ModelKind::SelfExplainable, SelfExplainableGcn::from_checkpoint)
    }

    pub fn surrogate(&self, dataset_id: &str) -> Result<Arc<SurrogateBundle>, RegistryError> {
        self.model(&self.surrogates, dataset_id, ModelKind::Surrogate, SurrogateBundle::from_checkpoint)
    }

    /// Reference index over the self-explainable model's masked embeddings. Built once per dataset.
    pub fn reference_index(&self, dataset_id: &str) -> Result<Arc<EmbeddingIndex>, RegistryError> {
        self.indexes.get_or_load(&dataset_id.to_owned(), || {
            let dataset = self.dataset(dataset_id)?;
            let model = self.self_explainable(dataset_id)?;
            Ok(build_index(&*model, &dataset)?)
        })
    }
}
