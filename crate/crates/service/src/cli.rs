//! Command-line driver. Explanation commands print the same JSON the
//! service returns for the equivalent request.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gnnx_core::distill::{distill_mlp, DEFAULT_TEMPERATURE};
use gnnx_core::gnn::{train_gcn, train_self_explainable, DEFAULT_SPARSITY_WEIGHT};
use gnnx_core::graph::{generate_ba2motifs, generate_feature_clusters, generate_tree_grid, DatasetBundle, Task};
use gnnx_core::nn::{CheckpointMeta, TrainConfig};
use serde::Serialize;

use crate::api::{
    Api, ApiError, FeatureRequest, GraphRequest, NodeRequest, ReferenceRequest, StrategyName, SummaryRequest,
};
use crate::http::{serve, DEFAULT_PORT};
use crate::registry::{is_valid_id, ModelKind, Registry};

#[derive(Debug, Parser)]
#[command(name = "gnnx", version, about = "Train GNNs and explain their predictions")]
pub struct Cli {
    /// Directory holding `datasets/` and `models/`.
    #[arg(long, global = true, env = "INGREX_STORAGE_ROOT", default_value = "storage")]
    pub storage_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    #[value(name = "tree_grid")]
    TreeGrid,
    #[value(name = "ba2motifs")]
    Ba2Motifs,
    #[value(name = "feature_clusters")]
    FeatureClusters,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct StrategyArgs {
    /// Select the k highest-scoring edges.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Select edges scoring strictly above this value.
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl StrategyArgs {
    fn resolve(&self, default_top_k: usize) -> (StrategyName, f64) {
        match (self.top_k, self.threshold) {
            (_, Some(t)) => (StrategyName::Threshold, t),
            (Some(k), None) => (StrategyName::TopK, k as f64),
            (None, None) => (StrategyName::TopK, default_top_k as f64),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic benchmark dataset to `datasets/{id}.json`.
    Generate {
        kind: GeneratorKind,
        /// Dataset id; defaults to the generator name.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        num_graphs: usize,
        #[arg(long, default_value_t = 20)]
        base_size: usize,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[arg(long, default_value_t = 80)]
        num_grids: usize,
        #[arg(long, default_value_t = 300)]
        num_nodes: usize,
        #[arg(long, default_value_t = 3)]
        num_classes: usize,
        #[arg(long, default_value_t = 8)]
        feature_dim: usize,
    },
    /// Train a GCN; graph-level datasets also get a self-explainable student.
    Train {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = DEFAULT_SPARSITY_WEIGHT)]
        sparsity_weight: f64,
    },
    /// Distil the trained GCN of a node-level dataset into an MLP surrogate.
    Distill {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
        temperature: f64,
    },
    /// Random-walk-with-restart explanation of one node.
    ExplainNode {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        node: usize,
        /// Graph holding the node, for graph-level datasets.
        #[arg(long)]
        graph: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        d: Option<f64>,
    },
    /// Edge-mask explanation of one graph prediction.
    ExplainGraph {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        graph: usize,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
    /// Shapley attribution of one node, or a summary over many when `--node` is absent.
    Attribute {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        node: Option<usize>,
        /// Nodes to summarize; defaults to the test split.
        #[arg(long, value_delimiter = ',', conflicts_with = "node")]
        samples: Option<Vec<usize>>,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Nearest same-class and different-class reference graphs.
    References {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        graph: usize,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
    /// Run the REST service.
    Serve {
        #[arg(long, env = "INGREX_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error(transparent)]
    Core(#[from] gnnx_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct Written<'a> {
    dataset_id: &'a str,
    path: String,
}

#[derive(Serialize)]
struct TrainedModel {
    kind: String,
    path: String,
    train_accuracy: Option<f64>,
    val_accuracy: Option<f64>,
    fidelity: Option<f64>,
}

#[derive(Serialize)]
struct Trained<'a> {
    dataset_id: &'a str,
    checkpoints: Vec<TrainedModel>,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("CLI output serializes")
}

fn write_model(
    registry: &Registry,
    dataset_id: &str,
    kind: ModelKind,
    ckpt: &gnnx_core::nn::Checkpoint,
) -> Result<String, CliError> {
    let path = registry.model_path(dataset_id, kind);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    ckpt.save(&path)?;
    Ok(path.display().to_string())
}

fn checked_id(id: &str) -> Result<&str, CliError> {
    if is_valid_id(id) {
        Ok(id)
    } else {
        Err(CliError::Usage(format!("invalid dataset id `{}`: use letters, digits, `_` and `-`", id)))
    }
}

fn config(args: &TrainArgs) -> TrainConfig {
    TrainConfig { learning_rate: args.lr, epochs: args.epochs, seed: args.seed, ..TrainConfig::default() }
}

fn load_dataset(registry: &Registry, id: &str) -> Result<Arc<DatasetBundle>, CliError> {
    checked_id(id)?;
    Ok(registry.dataset(id).map_err(ApiError::from)?)
}

fn generate(root: &Path, command: &Command) -> Result<String, CliError> {
    let Command::Generate {
        kind,
        dataset,
        seed,
        num_graphs,
        base_size,
        depth,
        num_grids,
        num_nodes,
        num_classes,
        feature_dim,
    } = command
    else {
        unreachable!("generate called with another command")
    };
    let mut bundle = match kind {
        GeneratorKind::TreeGrid => generate_tree_grid(*depth, *num_grids, *seed)?,
        GeneratorKind::Ba2Motifs => generate_ba2motifs(*num_graphs, *base_size, *seed)?,
        GeneratorKind::FeatureClusters => generate_feature_clusters(*num_nodes, *num_classes, *feature_dim, *seed)?,
    };
    if let Some(id) = dataset {
        bundle.id = checked_id(id)?.to_owned();
    }
    let path = Registry::new(root).dataset_path(&bundle.id);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    bundle.save(&path)?;
    Ok(json(&Written { dataset_id: &bundle.id, path: path.display().to_string() }))
}

/// Runs one parsed command and returns what it prints on success.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let registry = Arc::new(Registry::new(&cli.storage_root));
    let api = Api::new(registry.clone());
    match &cli.command {
        command @ Command::Generate { .. } => generate(&cli.storage_root, command),
        Command::Train { train, sparsity_weight } => {
            let dataset = load_dataset(&registry, &train.dataset)?;
            let cfg = config(train);
            let (teacher, history) = train_gcn(&dataset, &cfg)?;
            let last = history.last();
            let meta = CheckpointMeta::new(cfg.seed, cfg.epochs, dataset.id.clone());
            let mut checkpoints = vec![TrainedModel {
                kind: ModelKind::Gcn.to_string(),
                path: write_model(&registry, &dataset.id, ModelKind::Gcn, &teacher.to_checkpoint(meta.clone()))?,
                train_accuracy: last.map(|s| s.train_accuracy),
                val_accuracy: last.map(|s| s.val_accuracy),
                fidelity: None,
            }];
            if dataset.task == Task::GraphClassification {
                let student = train_self_explainable(&teacher, &dataset, &cfg, *sparsity_weight)?;
                let mut meta = meta;
                meta.sparsity_weight = Some(*sparsity_weight);
                let ckpt = student.to_checkpoint(meta);
                checkpoints.push(TrainedModel {
                    kind: ModelKind::SelfExplainable.to_string(),
                    path: write_model(&registry, &dataset.id, ModelKind::SelfExplainable, &ckpt)?,
                    train_accuracy: None,
                    val_accuracy: None,
                    fidelity: None,
                });
            }
            Ok(json(&Trained { dataset_id: &dataset.id, checkpoints }))
        }
        Command::Distill { train, temperature } => {
            let dataset = load_dataset(&registry, &train.dataset)?;
            let teacher = registry.gcn(&dataset.id).map_err(ApiError::from)?;
            let cfg = config(train);
            let bundle = distill_mlp(&teacher, &dataset, &cfg, *temperature)?;
            let path =
                write_model(&registry, &dataset.id, ModelKind::Surrogate, &bundle.to_checkpoint(cfg.seed, cfg.epochs))?;
            Ok(json(&Trained {
                dataset_id: &dataset.id,
                checkpoints: vec![TrainedModel {
                    kind: ModelKind::Surrogate.to_string(),
                    path,
                    train_accuracy: None,
                    val_accuracy: None,
                    fidelity: Some(bundle.fidelity),
                }],
            }))
        }
        Command::ExplainNode { dataset, node, graph, top_k, d } => Ok(api.explain_node(&NodeRequest {
            dataset_id: dataset.clone(),
            node_id: *node,
            graph_id: *graph,
            top_k: *top_k,
            d: *d,
        })?),
        Command::ExplainGraph { dataset, graph, strategy } => {
            let (strategy, value) = strategy.resolve(crate::api::DEFAULT_REFERENCE_TOP_K);
            Ok(api.explain_graph(&GraphRequest { dataset_id: dataset.clone(), graph_id: *graph, strategy, value })?)
        }
        Command::Attribute { dataset, node: Some(node), n_samples, seed, .. } => {
            Ok(api.explain_features(&FeatureRequest {
                dataset_id: dataset.clone(),
                node_id: *node,
                n_samples: *n_samples,
                seed: *seed,
            })?)
        }
        Command::Attribute { dataset, node: None, samples, n_samples, seed } => {
            Ok(api.summarize_features(&SummaryRequest {
                dataset_id: dataset.clone(),
                sample_ids: samples.clone(),
                n_samples: *n_samples,
                seed: *seed,
            })?)
        }
        Command::References { dataset, graph, strategy } => {
            let explicit = strategy.top_k.is_some() || strategy.threshold.is_some();
            let (name, value) = strategy.resolve(crate::api::DEFAULT_REFERENCE_TOP_K);
            Ok(api.references(&ReferenceRequest {
                dataset_id: dataset.clone(),
                graph_id: *graph,
                strategy: explicit.then_some(name),
                value: explicit.then_some(value),
            })?)
        }
        Command::Serve { port } => {
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("listening on port {}", port);
            runtime.block_on(serve(api, *port))?;
            Ok(String::new())
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code:
/// 0 on success, 1 for failures of the command itself, 2 for usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if !out.is_empty() {
                let _ = writeln!(std::io::stdout().lock(), "{}", out);
            }
            0
        }
        Err(e @ (CliError::Usage(_) | CliError::Api(ApiError::BadRequest { .. }))) => {
            eprintln!("error: {}", e);
            2
        }
        Err(e) => {
            eprintln!("error: {}", e);
            1
        }
    }
}
