//! Graph convolutional networks, learned edge masks and the self-explainable
//! student trained against a frozen teacher.
//!
//! A GCN layer computes `H' = σ((Â ⊙ M) H W + b)`. The plain model uses an
//! all-ones mask; the self-explainable model produces `M` per stored
//! adjacency entry as `sigmoid(MLP([h_i, h_j]))` from teacher embeddings.

mod train;

use rand::Rng;

use crate::graph::{NormalizedAdjacency, SparseMatrix, Task};
use crate::nn::{sigmoid, Activation, Checkpoint, CheckpointMeta, DenseMatrix, Linear, MlpParams, Parameters};
use crate::{Error, Result};

pub use train::{
    gcn_loss_and_grads, joint_loss_and_grads, predict_probabilities, prepare_graphs, train_gcn, train_gcn_with,
    train_self_explainable, train_self_explainable_with, EpochStats, JointContext, MaskOptions, PreparedGraph,
    TrainHistory, DEFAULT_SPARSITY_WEIGHT,
};

/// Masks are kept strictly inside (0, 1).
pub const MASK_EPSILON: f64 = 1e-12;

pub const DEFAULT_HIDDEN_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub layers: Vec<Linear>,
    /// Graph-level classifier applied to the mean-pooled final node embeddings.
    pub readout: Option<Linear>,
}

/// Everything a forward pass produced, kept for backpropagation and explanation.
#[derive(Debug, Clone)]
pub struct GcnForward {
    /// `hidden[0]` is the input features, `hidden[l + 1]` the output of layer `l`.
    pub hidden: Vec<DenseMatrix>,
    /// `(Â ⊙ M) H^l` per layer.
    pub propagated: Vec<DenseMatrix>,
    pub pre_activations: Vec<DenseMatrix>,
    pub pooled: Option<Vec<f64>>,
    /// One row per node for node-level models, a single row for graph-level models.
    pub logits: DenseMatrix,
}

impl GcnForward {
    pub fn final_embeddings(&self) -> &DenseMatrix {
        &self.hidden[self.hidden.len() - 1]
    }
}

impl GcnModel {
    /// Glorot-initialised model. Node-level models map `feature_dim -> hidden... -> num_classes`
    /// through GCN layers; graph-level models use GCN layers `feature_dim -> hidden...`
    /// followed by mean pooling and a linear classifier.
    pub fn init<R: Rng + ?Sized>(
        task: Task,
        feature_dim: usize,
        hidden_dims: &[usize],
        num_classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if feature_dim == 0 || num_classes == 0 || hidden_dims.contains(&0) {
            return Err(Error::InvalidParams("GCN dimensions must be positive".into()));
        }
        let model = match task {
            Task::NodeClassification => {
                let dims: Vec<usize> =
                    std::iter::once(feature_dim).chain(hidden_dims.iter().copied()).chain([num_classes]).collect();
                GcnModel { layers: dims.windows(2).map(|w| Linear::glorot(w[0], w[1], rng)).collect(), readout: None }
            }
            Task::GraphClassification => {
                if hidden_dims.is_empty() {
                    return Err(Error::InvalidParams("graph-level GCN needs at least one hidden layer".into()));
                }
                let dims: Vec<usize> = std::iter::once(feature_dim).chain(hidden_dims.iter().copied()).collect();
                let layers = dims.windows(2).map(|w| Linear::glorot(w[0], w[1], rng)).collect();
                let readout = Linear::glorot(dims[dims.len() - 1], num_classes, rng);
                GcnModel { layers, readout: Some(readout) }
            }
        };
        Ok(model)
    }

    pub fn task(&self) -> Task {
        if self.readout.is_some() {
            Task::GraphClassification
        } else {
            Task::NodeClassification
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.readout.as_ref().unwrap_or(&self.layers[self.layers.len() - 1]).output_dim()
    }

    /// Relu everywhere except the last layer of a node-level model.
    pub fn activation(&self, layer: usize) -> Activation {
        if self.readout.is_none() && layer + 1 == self.layers.len() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParams("GCN has no layers".into()));
        }
        let mut chain: Vec<&Linear> = self.layers.iter().collect();
        chain.extend(self.readout.iter());
        for pair in chain.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        for l in chain {
            if l.bias.len() != l.output_dim() {
                return Err(Error::DimensionMismatch("bias length differs from layer width".into()));
            }
        }
        Ok(())
    }

    /// Width of the embeddings that feed the edge-mask MLP.
    pub fn explanation_dim(&self) -> usize {
        match self.readout {
            Some(_) => self.layers[self.layers.len() - 1].output_dim(),
            None => self.layers[self.layers.len() - 1].input_dim(),
        }
    }

    /// The last hidden node representation before classification: the final
    /// GCN layer for graph-level models, the penultimate one for node-level models.
    pub fn explanation_embeddings<'a>(&self, forward: &'a GcnForward) -> &'a DenseMatrix {
        match self.readout {
            Some(_) => &forward.hidden[self.layers.len()],
            None => &forward.hidden[self.layers.len() - 1],
        }
    }

    pub fn zeros_like(&self) -> Self {
        GcnModel {
            layers: self.layers.iter().map(Linear::zeros_like).collect(),
            readout: self.readout.as_ref().map(Linear::zeros_like),
        }
    }

    /// Forward pass with `values` replacing the stored adjacency values.
    pub fn forward_with_values(
        &self,
        adj: &SparseMatrix,
        values: &[f64],
        features: &DenseMatrix,
    ) -> Result<GcnForward> {
        if features.n_cols() != self.feature_dim() {
            return Err(Error::DimensionMismatch(format!(
                "features have {} columns, model expects {}",
                features.n_cols(),
                self.feature_dim()
            )));
        }
        if features.n_rows() != adj.n_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows for a {}-node adjacency",
                features.n_rows(),
                adj.n_rows()
            )));
        }
        let mut hidden = vec![features.clone()];
        let mut propagated = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let p = adj.matmul_dense_with(values, &hidden[l])?;
            let z = layer.forward(&p)?;
            let act = self.activation(l);
            hidden.push(z.map(|v| act.apply(v)));
            propagated.push(p);
            pre_activations.push(z);
        }
        let (pooled, logits) = match &self.readout {
            Some(readout) => {
                let pooled = hidden[hidden.len() - 1].column_means();
                let row = DenseMatrix::from_vec(1, pooled.len(), pooled.clone())?;
                (Some(pooled), readout.forward(&row)?)
            }
            None => (None, hidden[hidden.len() - 1].clone()),
        };
        Ok(GcnForward { hidden, propagated, pre_activations, pooled, logits })
    }

    /// Gradients of a scalar loss given `d_logits`, plus (optionally) the
    /// gradient w.r.t. every stored adjacency value used in the forward pass.
    pub fn backward_with_values(
        &self,
        adj: &SparseMatrix,
        values: &[f64],
        forward: &GcnForward,
        d_logits: &DenseMatrix,
        want_value_grads: bool,
    ) -> Result<(GcnModel, Option<Vec<f64>>)> {
        if d_logits.shape() != forward.logits.shape() {
            return Err(Error::ShapeMismatch(format!(
                "logit gradient {:?} vs logits {:?}",
                d_logits.shape(),
                forward.logits.shape()
            )));
        }
        let mut grads = self.zeros_like();
        let n = adj.n_rows();
        let mut d_h = match (&self.readout, &forward.pooled) {
            (Some(readout), Some(pooled)) => {
                let g = grads.readout.as_mut().expect("zeros_like keeps the readout");
                for (i, &p) in pooled.iter().enumerate() {
                    for (c, &d) in d_logits.row(0).iter().enumerate() {
                        g.weight[(i, c)] = p * d;
                    }
                }
                g.bias = d_logits.row(0).to_vec();
                let d_pooled = d_logits.matmul_t(&readout.weight)?;
                let mut d_h = DenseMatrix::zeros(n, d_pooled.n_cols());
                let inv_n = 1.0 / n as f64;
                for i in 0..n {
                    for (d, &dp) in d_h.row_mut(i).iter_mut().zip(d_pooled.row(0)) {
                        *d = dp * inv_n;
                    }
                }
                d_h
            }
            _ => d_logits.clone(),
        };
        let mut d_values = want_value_grads.then(|| vec![0.0; adj.nnz()]);
        for l in (0..self.layers.len()).rev() {
            let act = self.activation(l);
            let mut d_z = d_h;
            for (d, &z) in d_z.data_mut().iter_mut().zip(forward.pre_activations[l].data()) {
                *d *= act.derivative(z);
            }
            grads.layers[l].weight = forward.propagated[l].t_matmul(&d_z)?;
            grads.layers[l].bias = d_z.column_sums();
            let d_p = d_z.matmul_t(&self.layers[l].weight)?;
            if let Some(dv) = d_values.as_mut() {
                let h = &forward.hidden[l];
                for (k, (i, j, _)) in adj.entries().enumerate() {
                    dv[k] += crate::nn::dense::dot(d_p.row(i), h.row(j));
                }
            }
            d_h = if l > 0 { adj.t_matmul_dense_with(values, &d_p)? } else { d_p };
        }
        Ok((grads, d_values))
    }

    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> Checkpoint {
        let mut layers = self.layers.clone();
        let mut activations: Vec<Activation> = (0..self.layers.len()).map(|l| self.activation(l)).collect();
        if let Some(r) = &self.readout {
            layers.push(r.clone());
            activations.push(Activation::Identity);
        }
        let mut ckpt = Checkpoint::from_layers("gcn", &layers, &activations, meta);
        ckpt.readout = self.readout.as_ref().map(|_| "mean".to_string());
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind("gcn")?;
        let mut layers = ckpt.layers()?;
        let readout = match ckpt.readout.as_deref() {
            Some("mean") => Some(layers.pop().ok_or_else(|| Error::Parse("readout without layers".into()))?),
            Some(other) => return Err(Error::Parse(format!("unknown readout `{}`", other))),
            None => None,
        };
        let model = GcnModel { layers, readout };
        if model.layers.is_empty() {
            return Err(Error::Parse("checkpoint has no GCN layers".into()));
        }
        model.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(model)
    }
}

impl Parameters for GcnModel {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().chain(self.readout.iter()).flat_map(Linear::tensors).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().chain(self.readout.iter_mut()).flat_map(Linear::tensors_mut).collect()
    }
}

/// Plain forward pass over the stored normalized adjacency.
pub fn gcn_forward(model: &GcnModel, norm_adj: &NormalizedAdjacency, features: &DenseMatrix) -> Result<GcnForward> {
    model.forward_with_values(&norm_adj.matrix, norm_adj.matrix.values(), features)
}

/// Per-entry mask aligned with the CSR storage order of an adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMask {
    pub values: Vec<f64>,
}

impl EdgeMask {
    pub fn ones(len: usize) -> Self {
        Self { values: vec![1.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

/// Rows `[h_i, h_j]` for every stored entry `(i, j)` in storage order.
pub fn edge_pair_features(embeddings: &DenseMatrix, adjacency: &SparseMatrix) -> Result<DenseMatrix> {
    if embeddings.n_rows() != adjacency.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} embedding rows for {} nodes",
            embeddings.n_rows(),
            adjacency.n_rows()
        )));
    }
    let h = embeddings.n_cols();
    let mut data = Vec::with_capacity(adjacency.nnz() * 2 * h);
    for (i, j, _) in adjacency.entries() {
        data.extend_from_slice(embeddings.row(i));
        data.extend_from_slice(embeddings.row(j));
    }
    DenseMatrix::from_vec(adjacency.nnz(), 2 * h, data)
}

pub(crate) fn squash(logit: f64) -> f64 {
    sigmoid(logit).clamp(MASK_EPSILON, 1.0 - MASK_EPSILON)
}

/// `m_ij = sigmoid(MLP([h_i, h_j]))` for every stored entry of `adjacency`.
pub fn compute_edge_mask(mask_mlp: &MlpParams, embeddings: &DenseMatrix, adjacency: &SparseMatrix) -> Result<EdgeMask> {
    if mask_mlp.output_dim() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "mask MLP must output 1 value, outputs {}",
            mask_mlp.output_dim()
        )));
    }
    let inputs = edge_pair_features(embeddings, adjacency)?;
    let trace = mask_mlp.forward_batch(&inputs)?;
    Ok(EdgeMask { values: trace.output.data().iter().map(|&o| squash(o)).collect() })
}

/// Student GCN whose propagation is gated by a learned edge mask. The mask
/// MLP reads embeddings from the frozen teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfExplainableGcn {
    pub base: GcnModel,
    pub mask_mlp: MlpParams,
    pub teacher: GcnModel,
}

impl SelfExplainableGcn {
    /// Student starts as a copy of the teacher; the mask MLP is freshly initialised
    /// with its output bias set to `init_bias`.
    pub fn from_teacher<R: Rng + ?Sized>(teacher: &GcnModel, options: &MaskOptions, rng: &mut R) -> Result<Self> {
        let input = 2 * teacher.explanation_dim();
        let mut mask_mlp =
            MlpParams::init(&[input, options.hidden_dim, 1], vec![Activation::Relu, Activation::Identity], rng)?;
        mask_mlp.layers[1].bias[0] = options.init_bias;
        let model = SelfExplainableGcn { base: teacher.clone(), mask_mlp, teacher: teacher.clone() };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.teacher.validate()?;
        self.mask_mlp.validate()?;
        if self.mask_mlp.input_dim() != 2 * self.teacher.explanation_dim() {
            return Err(Error::DimensionMismatch(format!(
                "mask MLP expects {} inputs, teacher embeddings give 2 x {}",
                self.mask_mlp.input_dim(),
                self.teacher.explanation_dim()
            )));
        }
        if self.mask_mlp.output_dim() != 1 {
            return Err(Error::DimensionMismatch("mask MLP must have a single output".into()));
        }
        if self.base.feature_dim() != self.teacher.feature_dim() || self.base.task() != self.teacher.task() {
            return Err(Error::DimensionMismatch("student and teacher disagree on input or task".into()));
        }
        Ok(())
    }

    pub fn task(&self) -> Task {
        self.base.task()
    }

    /// Inference-time mask for one graph.
    pub fn edge_mask(&self, norm_adj: &NormalizedAdjacency, features: &DenseMatrix) -> Result<EdgeMask> {
        let teacher_forward = gcn_forward(&self.teacher, norm_adj, features)?;
        compute_edge_mask(&self.mask_mlp, self.teacher.explanation_embeddings(&teacher_forward), &norm_adj.matrix)
    }

    /// Mask plus masked forward pass.
    pub fn predict(&self, norm_adj: &NormalizedAdjacency, features: &DenseMatrix) -> Result<(EdgeMask, GcnForward)> {
        let mask = self.edge_mask(norm_adj, features)?;
        let forward = masked_gcn_forward(self, norm_adj, features, &mask)?;
        Ok((mask, forward))
    }

    pub fn to_checkpoint(&self, meta: CheckpointMeta) -> Checkpoint {
        let mut ckpt = self.base.to_checkpoint(meta.clone());
        ckpt.kind = "self_explainable_gcn".into();
        ckpt.mask_mlp = Some(Box::new(Checkpoint::from_mlp("mlp", &self.mask_mlp, meta.clone())));
        ckpt.teacher = Some(Box::new(self.teacher.to_checkpoint(meta)));
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind("self_explainable_gcn")?;
        let mut base_ckpt = ckpt.clone();
        base_ckpt.kind = "gcn".into();
        base_ckpt.mask_mlp = None;
        base_ckpt.teacher = None;
        let base = GcnModel::from_checkpoint(&base_ckpt)?;
        let mask_mlp = ckpt.mask_mlp.as_ref().ok_or_else(|| Error::Parse("missing `mask_mlp`".into()))?.to_mlp()?;
        let teacher =
            GcnModel::from_checkpoint(ckpt.teacher.as_ref().ok_or_else(|| Error::Parse("missing `teacher`".into()))?)?;
        let model = SelfExplainableGcn { base, mask_mlp, teacher };
        model.validate().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(model)
    }
}

impl Parameters for SelfExplainableGcn {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.base.tensors();
        t.extend(self.mask_mlp.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.base.tensors_mut();
        t.extend(self.mask_mlp.tensors_mut());
        t
    }
}

/// Student forward pass with every stored adjacency value scaled by its mask value, in every layer.
pub fn masked_gcn_forward(
    model: &SelfExplainableGcn,
    norm_adj: &NormalizedAdjacency,
    features: &DenseMatrix,
    mask: &EdgeMask,
) -> Result<GcnForward> {
    let adj = &norm_adj.matrix;
    if mask.len() != adj.nnz() {
        return Err(Error::MisalignedMask { expected: adj.nnz(), got: mask.len() });
    }
    let values: Vec<f64> = adj.values().iter().zip(&mask.values).map(|(a, m)| a * m).collect();
    model.base.forward_with_values(adj, &values, features)
}
