//! Distils a node-level GCN into an MLP that only sees node features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gnn::{prepare_graphs, GcnModel};
use crate::graph::{DatasetBundle, Task};
use crate::nn::loss::kl_logit_grad;
use crate::nn::{
    argmax, grad_step, kl_divergence, softmax, softmax_with_temperature, Activation, Checkpoint, CheckpointMeta,
    DenseMatrix, MlpParams, OptimizerState, TrainConfig,
};
use crate::{Error, Result};

pub const DEFAULT_TEMPERATURE: f64 = 2.0;
pub const STUDENT_HIDDEN_DIM: usize = 32;

/// Feature-only student of a GCN teacher.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateBundle {
    pub student: MlpParams,
    /// Argmax agreement with the teacher on held-out nodes, measured after training.
    pub fidelity: f64,
    pub dataset_id: String,
    pub temperature: f64,
}

impl SurrogateBundle {
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.student.forward(x)?))
    }

    pub fn predicted_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.student.forward(x)?))
    }

    pub fn to_checkpoint(&self, seed: u64, epochs: usize) -> Checkpoint {
        let mut meta = CheckpointMeta::new(seed, epochs, self.dataset_id.clone());
        meta.fidelity = Some(self.fidelity);
        meta.temperature = Some(self.temperature);
        Checkpoint::from_mlp("mlp_surrogate", &self.student, meta)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind("mlp_surrogate")?;
        Ok(Self {
            student: ckpt.to_mlp()?,
            fidelity: ckpt.meta.fidelity.ok_or_else(|| Error::Parse("surrogate checkpoint lacks fidelity".into()))?,
            dataset_id: ckpt.meta.dataset_id.clone(),
            temperature: ckpt.meta.temperature.unwrap_or(DEFAULT_TEMPERATURE),
        })
    }
}

/// Mean `KL(softmax(t / T) ‖ softmax(s / T))` over the rows of `features`, and its gradient.
pub fn distill_loss_and_grads(
    student: &MlpParams,
    features: &DenseMatrix,
    teacher_soft: &[Vec<f64>],
    temperature: f64,
) -> Result<(f64, MlpParams)> {
    if teacher_soft.len() != features.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} teacher targets for {} feature rows",
            teacher_soft.len(),
            features.n_rows()
        )));
    }
    let trace = student.forward_batch(features)?;
    let scale = 1.0 / features.n_rows().max(1) as f64;
    let mut loss = 0.0;
    let mut d_out = DenseMatrix::zeros(trace.output.n_rows(), trace.output.n_cols());
    for (i, target) in teacher_soft.iter().enumerate() {
        let p = softmax_with_temperature(trace.output.row(i), temperature);
        loss += scale * kl_divergence(target, &p)?;
        for (d, g) in d_out.row_mut(i).iter_mut().zip(kl_logit_grad(target, &p, temperature)) {
            *d = scale * g;
        }
    }
    let (grads, _) = student.backward(&trace, &d_out)?;
    Ok((loss, grads))
}

fn teacher_logits(teacher: &GcnModel, dataset: &DatasetBundle) -> Result<DenseMatrix> {
    if dataset.task != Task::NodeClassification || teacher.task() != Task::NodeClassification {
        return Err(Error::InvalidConfig("surrogates are distilled from node-level teachers only".into()));
    }
    if teacher.feature_dim() != dataset.feature_dim() {
        return Err(Error::DatasetMismatch(format!(
            "teacher expects {} features, dataset `{}` has {}",
            teacher.feature_dim(),
            dataset.id,
            dataset.feature_dim()
        )));
    }
    let prepared = prepare_graphs(dataset)?;
    Ok(crate::gnn::gcn_forward(teacher, &prepared[0].adjacency, &prepared[0].features)?.logits)
}

fn agreement(student: &MlpParams, features: &DenseMatrix, teacher: &DenseMatrix, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Ok(1.0);
    }
    let mut agree = 0usize;
    for &i in nodes {
        if argmax(&student.forward(features.row(i))?) == argmax(teacher.row(i)) {
            agree += 1;
        }
    }
    Ok(agree as f64 / nodes.len() as f64)
}

fn held_out(dataset: &DatasetBundle) -> Vec<usize> {
    let mut nodes: Vec<usize> = dataset.split.val.iter().chain(&dataset.split.test).copied().collect();
    if nodes.is_empty() {
        nodes = (0..dataset.item_count()).collect();
    }
    nodes.sort_unstable();
    nodes
}

/// Trains a two-layer MLP (hidden 32, relu) on the training nodes' features
/// to match the teacher's temperature-softened class distribution.
pub fn distill_mlp(
    teacher: &GcnModel,
    dataset: &DatasetBundle,
    config: &TrainConfig,
    temperature: f64,
) -> Result<SurrogateBundle> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidConfig(format!("temperature must be positive, got {}", temperature)));
    }
    config.validate()?;
    let logits = teacher_logits(teacher, dataset)?;
    let features = &dataset.graphs[0].node_features;
    let train: Vec<usize> =
        if dataset.split.train.is_empty() { (0..dataset.item_count()).collect() } else { dataset.split.train.clone() };
    let train_x = features.select_rows(&train);
    let targets: Vec<Vec<f64>> = train.iter().map(|&i| softmax_with_temperature(logits.row(i), temperature)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut student = MlpParams::init(
        &[dataset.feature_dim(), STUDENT_HIDDEN_DIM, dataset.num_classes],
        vec![Activation::Relu, Activation::Identity],
        &mut rng,
    )?;
    let mut state = OptimizerState::default();
    for _ in 0..config.epochs {
        let (_, grads) = distill_loss_and_grads(&student, &train_x, &targets, temperature)?;
        grad_step(&mut student, &grads, config, &mut state)?;
    }
    let fidelity = agreement(&student, features, &logits, &held_out(dataset))?;
    Ok(SurrogateBundle { student, fidelity, dataset_id: dataset.id.clone(), temperature })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub all: f64,
}

/// Argmax agreement between surrogate and teacher on every split. Empty splits report 1.0.
pub fn fidelity_report(
    bundle: &SurrogateBundle,
    teacher: &GcnModel,
    dataset: &DatasetBundle,
) -> Result<FidelityReport> {
    if bundle.dataset_id != dataset.id {
        return Err(Error::DatasetMismatch(format!(
            "surrogate was distilled on `{}`, not `{}`",
            bundle.dataset_id, dataset.id
        )));
    }
    if bundle.student.input_dim() != dataset.feature_dim() {
        return Err(Error::DatasetMismatch(format!(
            "surrogate expects {} features, dataset has {}",
            bundle.student.input_dim(),
            dataset.feature_dim()
        )));
    }
    let logits = teacher_logits(teacher, dataset)?;
    let features = &dataset.graphs[0].node_features;
    let all: Vec<usize> = (0..dataset.item_count()).collect();
    Ok(FidelityReport {
        train: agreement(&bundle.student, features, &logits, &dataset.split.train)?,
        val: agreement(&bundle.student, features, &logits, &dataset.split.val)?,
        test: agreement(&bundle.student, features, &logits, &dataset.split.test)?,
        all: agreement(&bundle.student, features, &logits, &all)?,
    })
}
