use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{edge_pair_features, masked_gcn_forward, squash, EdgeMask, GcnForward, GcnModel, SelfExplainableGcn};
use crate::graph::{sym_normalized_adjacency, DatasetBundle, NormalizedAdjacency, Task};
use crate::nn::loss::{cross_entropy_logit_grad, kl_logit_grad};
use crate::nn::{
    argmax, cross_entropy, grad_step, kl_divergence, softmax, DenseMatrix, MlpParams, OptimizerState, Parameters,
    TrainConfig,
};
use crate::{Error, Result};

use super::{gcn_forward, DEFAULT_HIDDEN_DIM};

/// A graph with its symmetric normalized adjacency, ready for GCN passes.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub adjacency: NormalizedAdjacency,
    pub features: DenseMatrix,
}

pub fn prepare_graphs(dataset: &DatasetBundle) -> Result<Vec<PreparedGraph>> {
    dataset
        .graphs
        .iter()
        .map(|g| Ok(PreparedGraph { adjacency: sym_normalized_adjacency(g)?, features: g.node_features.clone() }))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Class probabilities for each item (node or graph) in `items`.
pub fn predict_probabilities(
    model: &GcnModel,
    prepared: &[PreparedGraph],
    task: Task,
    items: &[usize],
) -> Result<Vec<Vec<f64>>> {
    match task {
        Task::NodeClassification => {
            let p = &prepared[0];
            let out = gcn_forward(model, &p.adjacency, &p.features)?;
            Ok(items.iter().map(|&i| softmax(out.logits.row(i))).collect())
        }
        Task::GraphClassification => items
            .iter()
            .map(|&g| {
                let p = &prepared[g];
                Ok(softmax(gcn_forward(model, &p.adjacency, &p.features)?.logits.row(0)))
            })
            .collect(),
    }
}

fn accuracy(model: &GcnModel, prepared: &[PreparedGraph], dataset: &DatasetBundle, items: &[usize]) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let probs = predict_probabilities(model, prepared, dataset.task, items)?;
    let correct = items.iter().zip(&probs).filter(|(&i, p)| argmax(p) == dataset.label(i)).count();
    Ok(correct as f64 / items.len() as f64)
}

fn check_task(model_task: Task, dataset: &DatasetBundle) -> Result<()> {
    if model_task != dataset.task {
        return Err(Error::IncompatibleModel(format!(
            "model is for {:?}, dataset `{}` is {:?}",
            model_task, dataset.id, dataset.task
        )));
    }
    Ok(())
}

/// Mean cross-entropy over `items` and its gradient.
pub fn gcn_loss_and_grads(
    model: &GcnModel,
    prepared: &[PreparedGraph],
    dataset: &DatasetBundle,
    items: &[usize],
) -> Result<(f64, GcnModel)> {
    check_task(model.task(), dataset)?;
    let scale = 1.0 / items.len().max(1) as f64;
    let mut grads = model.zeros_like();
    let mut loss = 0.0;
    match dataset.task {
        Task::NodeClassification => {
            let p = &prepared[0];
            let out = gcn_forward(model, &p.adjacency, &p.features)?;
            let mut d_logits = DenseMatrix::zeros(out.logits.n_rows(), out.logits.n_cols());
            for &i in items {
                let probs = softmax(out.logits.row(i));
                let label = dataset.label(i);
                loss += scale * cross_entropy(&probs, label)?;
                for (d, g) in d_logits.row_mut(i).iter_mut().zip(cross_entropy_logit_grad(&probs, label)) {
                    *d += scale * g;
                }
            }
            let adj = &p.adjacency.matrix;
            grads = model.backward_with_values(adj, adj.values(), &out, &d_logits, false)?.0;
        }
        Task::GraphClassification => {
            for &g in items {
                let p = &prepared[g];
                let out = gcn_forward(model, &p.adjacency, &p.features)?;
                let probs = softmax(out.logits.row(0));
                let label = dataset.label(g);
                loss += scale * cross_entropy(&probs, label)?;
                let d_logits = DenseMatrix::from_vec(1, probs.len(), cross_entropy_logit_grad(&probs, label))?;
                let adj = &p.adjacency.matrix;
                let (g_grads, _) = model.backward_with_values(adj, adj.values(), &out, &d_logits, false)?;
                grads.accumulate(&g_grads, scale);
            }
        }
    }
    Ok((loss, grads))
}

/// Trains the default two-layer GCN (hidden width 16).
pub fn train_gcn(dataset: &DatasetBundle, config: &TrainConfig) -> Result<(GcnModel, TrainHistory)> {
    let hidden: &[usize] = match dataset.task {
        Task::NodeClassification => &[DEFAULT_HIDDEN_DIM],
        Task::GraphClassification => &[DEFAULT_HIDDEN_DIM, DEFAULT_HIDDEN_DIM],
    };
    train_gcn_with(dataset, hidden, config)
}

/// Full-batch training minimising cross-entropy on the training split.
pub fn train_gcn_with(
    dataset: &DatasetBundle,
    hidden_dims: &[usize],
    config: &TrainConfig,
) -> Result<(GcnModel, TrainHistory)> {
    config.validate()?;
    if dataset.split.train.is_empty() {
        return Err(Error::InvalidConfig(format!("dataset `{}` has an empty training split", dataset.id)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GcnModel::init(dataset.task, dataset.feature_dim(), hidden_dims, dataset.num_classes, &mut rng)?;
    let prepared = prepare_graphs(dataset)?;
    let mut state = OptimizerState::default();
    let mut history = TrainHistory::default();
    for epoch in 0..config.epochs {
        let (loss, grads) = gcn_loss_and_grads(&model, &prepared, dataset, &dataset.split.train)?;
        grad_step(&mut model, &grads, config, &mut state)?;
        history.epochs.push(EpochStats {
            epoch,
            loss,
            train_accuracy: accuracy(&model, &prepared, dataset, &dataset.split.train)?,
            val_accuracy: accuracy(&model, &prepared, dataset, &dataset.split.val)?,
        });
    }
    Ok((model, history))
}

/// Weight of the mean-mask penalty in the joint loss.
pub const DEFAULT_SPARSITY_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MaskOptions {
    pub hidden_dim: usize,
    /// Initial output bias of the mask MLP; masks start near `sigmoid(init_bias)`.
    pub init_bias: f64,
}

impl Default for MaskOptions {
    fn default() -> Self {
        Self { hidden_dim: 16, init_bias: 0.0 }
    }
}

/// Teacher-side quantities that stay fixed during joint training.
#[derive(Debug, Clone)]
pub struct JointContext {
    pub prepared: Vec<PreparedGraph>,
    /// Mask MLP inputs per graph, one row per stored adjacency entry.
    pub pair_features: Vec<DenseMatrix>,
    /// Teacher class probabilities: per node (node task) or a single row (graph task), per graph.
    pub teacher_probs: Vec<Vec<Vec<f64>>>,
    pub sparsity_weight: f64,
}

impl JointContext {
    pub fn new(teacher: &GcnModel, dataset: &DatasetBundle, sparsity_weight: f64) -> Result<Self> {
        if teacher.feature_dim() != dataset.feature_dim() {
            return Err(Error::DimensionMismatch(format!(
                "teacher expects {} features, dataset `{}` has {}",
                teacher.feature_dim(),
                dataset.id,
                dataset.feature_dim()
            )));
        }
        check_task(teacher.task(), dataset)?;
        if !(sparsity_weight.is_finite() && sparsity_weight >= 0.0) {
            return Err(Error::InvalidConfig(format!("sparsity weight {} must be >= 0", sparsity_weight)));
        }
        let prepared = prepare_graphs(dataset)?;
        let mut pair_features = Vec::with_capacity(prepared.len());
        let mut teacher_probs = Vec::with_capacity(prepared.len());
        for p in &prepared {
            let out = gcn_forward(teacher, &p.adjacency, &p.features)?;
            pair_features.push(edge_pair_features(teacher.explanation_embeddings(&out), &p.adjacency.matrix)?);
            teacher_probs.push(out.logits.rows().map(softmax).collect());
        }
        Ok(Self { prepared, pair_features, teacher_probs, sparsity_weight })
    }
}

struct MaskedPass {
    pre_mask: crate::nn::MlpTrace,
    mask: EdgeMask,
    forward: GcnForward,
}

fn masked_pass(model: &SelfExplainableGcn, ctx: &JointContext, g: usize) -> Result<MaskedPass> {
    let pre_mask = model.mask_mlp.forward_batch(&ctx.pair_features[g])?;
    let mask = EdgeMask { values: pre_mask.output.data().iter().map(|&o| squash(o)).collect() };
    let p = &ctx.prepared[g];
    let forward = masked_gcn_forward(model, &p.adjacency, &p.features, &mask)?;
    Ok(MaskedPass { pre_mask, mask, forward })
}

/// Backpropagates one graph's logit gradient and mask-mean weight into `grads`.
fn accumulate_joint(
    model: &SelfExplainableGcn,
    ctx: &JointContext,
    g: usize,
    pass: &MaskedPass,
    d_logits: &DenseMatrix,
    sparsity_scale: f64,
    grads: &mut (GcnModel, MlpParams),
) -> Result<()> {
    let adj = &ctx.prepared[g].adjacency.matrix;
    let values: Vec<f64> = adj.values().iter().zip(&pass.mask.values).map(|(a, m)| a * m).collect();
    let (base_grads, d_values) = model.base.backward_with_values(adj, &values, &pass.forward, d_logits, true)?;
    grads.0.accumulate(&base_grads, 1.0);
    let d_values = d_values.expect("requested");
    let nnz = adj.nnz().max(1) as f64;
    let d_pre: Vec<f64> = d_values
        .iter()
        .zip(adj.values())
        .zip(&pass.pre_mask.output.data().to_vec())
        .map(|((dv, a), &o)| {
            let d_mask = dv * a + sparsity_scale / nnz;
            let s = crate::nn::sigmoid(o);
            d_mask * s * (1.0 - s)
        })
        .collect();
    let d_out = DenseMatrix::from_vec(d_pre.len(), 1, d_pre)?;
    let (mlp_grads, _) = model.mask_mlp.backward(&pass.pre_mask, &d_out)?;
    grads.1.accumulate(&mlp_grads, 1.0);
    Ok(())
}

/// Joint objective `KL(teacher ‖ masked student) + CE + sparsity_weight · mean(mask)`,
/// averaged over `items`, with gradients for the student and the mask MLP.
pub fn joint_loss_and_grads(
    model: &SelfExplainableGcn,
    ctx: &JointContext,
    dataset: &DatasetBundle,
    items: &[usize],
) -> Result<(f64, (GcnModel, MlpParams))> {
    let mut grads = (model.base.zeros_like(), model.mask_mlp.zeros_like());
    let scale = 1.0 / items.len().max(1) as f64;
    let mut loss = 0.0;
    let lambda = ctx.sparsity_weight;
    match dataset.task {
        Task::NodeClassification => {
            let pass = masked_pass(model, ctx, 0)?;
            let logits = &pass.forward.logits;
            let mut d_logits = DenseMatrix::zeros(logits.n_rows(), logits.n_cols());
            for &i in items {
                let probs = softmax(logits.row(i));
                let teacher = &ctx.teacher_probs[0][i];
                let label = dataset.label(i);
                loss += scale * (kl_divergence(teacher, &probs)? + cross_entropy(&probs, label)?);
                let kl = kl_logit_grad(teacher, &probs, 1.0);
                let ce = cross_entropy_logit_grad(&probs, label);
                for ((d, a), b) in d_logits.row_mut(i).iter_mut().zip(kl).zip(ce) {
                    *d += scale * (a + b);
                }
            }
            loss += lambda * pass.mask.mean();
            accumulate_joint(model, ctx, 0, &pass, &d_logits, lambda, &mut grads)?;
        }
        Task::GraphClassification => {
            for &g in items {
                let pass = masked_pass(model, ctx, g)?;
                let probs = softmax(pass.forward.logits.row(0));
                let teacher = &ctx.teacher_probs[g][0];
                let label = dataset.label(g);
                loss += scale
                    * (kl_divergence(teacher, &probs)? + cross_entropy(&probs, label)? + lambda * pass.mask.mean());
                let kl = kl_logit_grad(teacher, &probs, 1.0);
                let ce = cross_entropy_logit_grad(&probs, label);
                let d: Vec<f64> = kl.iter().zip(&ce).map(|(a, b)| scale * (a + b)).collect();
                let d_logits = DenseMatrix::from_vec(1, d.len(), d)?;
                accumulate_joint(model, ctx, g, &pass, &d_logits, scale * lambda, &mut grads)?;
            }
        }
    }
    Ok((loss, grads))
}

pub fn train_self_explainable(
    teacher: &GcnModel,
    dataset: &DatasetBundle,
    config: &TrainConfig,
    sparsity_weight: f64,
) -> Result<SelfExplainableGcn> {
    train_self_explainable_with(teacher, dataset, config, sparsity_weight, &MaskOptions::default())
}

/// Trains the student GCN and the mask MLP together against a frozen teacher.
/// The student starts as a copy of the teacher.
pub fn train_self_explainable_with(
    teacher: &GcnModel,
    dataset: &DatasetBundle,
    config: &TrainConfig,
    sparsity_weight: f64,
    options: &MaskOptions,
) -> Result<SelfExplainableGcn> {
    config.validate()?;
    if dataset.split.train.is_empty() {
        return Err(Error::InvalidConfig(format!("dataset `{}` has an empty training split", dataset.id)));
    }
    let ctx = JointContext::new(teacher, dataset, sparsity_weight)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = SelfExplainableGcn::from_teacher(teacher, options, &mut rng)?;
    let mut state = OptimizerState::default();
    for _ in 0..config.epochs {
        let (_, grads) = joint_loss_and_grads(&model, &ctx, dataset, &dataset.split.train)?;
        grad_step(&mut model, &grads, config, &mut state)?;
    }
    Ok(model)
}
