//! Hand-written backward passes against central finite differences.

mod common;

use common::{graph_dataset, max_gradient_error, node_dataset, rng};
use gnnx_core::distill::distill_loss_and_grads;
use gnnx_core::gnn::{
    gcn_loss_and_grads, joint_loss_and_grads, prepare_graphs, GcnModel, JointContext, MaskOptions, SelfExplainableGcn,
};
use gnnx_core::graph::Task;
use gnnx_core::nn::{softmax_with_temperature, Activation, DenseMatrix, MlpParams, Parameters};
use rand::Rng;

const TOLERANCE: f64 = 1e-4;

/// Moves parameters off zero biases, where relu units sit exactly on their kink.
fn jitter<P: Parameters>(params: &mut P, scale: f64, rng: &mut impl Rng) {
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v += rng.random_range(-scale..scale));
    }
}

#[test]
fn gcn_node_classification_gradients() {
    for seed in 0..4 {
        let mut r = rng(seed);
        let data = node_dataset(4, 3, 2, &mut r);
        let mut model = GcnModel::init(Task::NodeClassification, 3, &[5], 2, &mut r).unwrap();
        jitter(&mut model, 0.1, &mut r);
        let prepared = prepare_graphs(&data).unwrap();
        let items = &data.split.train;
        let (_, grads) = gcn_loss_and_grads(&model, &prepared, &data, items).unwrap();
        let err = max_gradient_error(&model, &grads, |m| gcn_loss_and_grads(m, &prepared, &data, items).unwrap().0);
        assert!(err <= TOLERANCE, "seed {}: relative error {}", seed, err);
    }
}

#[test]
fn gcn_graph_classification_gradients() {
    for seed in 0..4 {
        let mut r = rng(100 + seed);
        let data = graph_dataset(3, 4, 3, 2, &mut r);
        let mut model = GcnModel::init(Task::GraphClassification, 3, &[4, 4], 2, &mut r).unwrap();
        jitter(&mut model, 0.1, &mut r);
        let prepared = prepare_graphs(&data).unwrap();
        let items = &data.split.train;
        let (_, grads) = gcn_loss_and_grads(&model, &prepared, &data, items).unwrap();
        let err = max_gradient_error(&model, &grads, |m| gcn_loss_and_grads(m, &prepared, &data, items).unwrap().0);
        assert!(err <= TOLERANCE, "seed {}: relative error {}", seed, err);
    }
}

fn joint_check(task: Task, seed: u64) -> f64 {
    let mut r = rng(seed);
    let data = match task {
        Task::NodeClassification => node_dataset(4, 3, 2, &mut r),
        Task::GraphClassification => graph_dataset(3, 4, 3, 2, &mut r),
    };
    let hidden: &[usize] = if task == Task::NodeClassification { &[4] } else { &[4, 4] };
    let teacher = GcnModel::init(task, 3, hidden, 2, &mut r).unwrap();
    let mut model =
        SelfExplainableGcn::from_teacher(&teacher, &MaskOptions { hidden_dim: 5, init_bias: 0.3 }, &mut r).unwrap();
    jitter(&mut model, 0.2, &mut r);
    let ctx = JointContext::new(&teacher, &data, 0.7).unwrap();
    let items = &data.split.train;
    let (_, grads) = joint_loss_and_grads(&model, &ctx, &data, items).unwrap();
    max_gradient_error(&model, &grads, |m| joint_loss_and_grads(m, &ctx, &data, items).unwrap().0)
}

#[test]
fn joint_loss_gradients_cover_student_and_mask_mlp() {
    for seed in 0..3 {
        for task in [Task::GraphClassification, Task::NodeClassification] {
            let err = joint_check(task, 200 + seed);
            assert!(err <= TOLERANCE, "{:?} seed {}: relative error {}", task, seed, err);
        }
    }
}

#[test]
fn surrogate_distillation_gradients() {
    for seed in 0..4 {
        let mut r = rng(300 + seed);
        let student = MlpParams::init(&[3, 6, 3], vec![Activation::Relu, Activation::Identity], &mut r).unwrap();
        let x = DenseMatrix::from_vec(4, 3, (0..12).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let targets: Vec<Vec<f64>> = (0..4)
            .map(|_| softmax_with_temperature(&[r.random_range(-2.0..2.0), r.random(), r.random()], 2.0))
            .collect();
        let (_, grads) = distill_loss_and_grads(&student, &x, &targets, 2.0).unwrap();
        let err = max_gradient_error(&student, &grads, |s| distill_loss_and_grads(s, &x, &targets, 2.0).unwrap().0);
        assert!(err <= TOLERANCE, "seed {}: relative error {}", seed, err);
    }
}

#[test]
fn adjacency_value_gradients_match_finite_differences() {
    for seed in 0..3 {
        let mut r = rng(400 + seed);
        let data = graph_dataset(1, 4, 3, 2, &mut r);
        let mut model = GcnModel::init(Task::GraphClassification, 3, &[4, 4], 2, &mut r).unwrap();
        jitter(&mut model, 0.1, &mut r);
        let g = &data.graphs[0];
        let adj = gnnx_core::graph::sym_normalized_adjacency(g).unwrap();
        let weights: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
        // scalar objective: w · logits
        let objective = |values: &[f64]| {
            let fwd = model.forward_with_values(&adj.matrix, values, &g.node_features).unwrap();
            fwd.logits.row(0).iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()
        };
        let values = adj.matrix.values().to_vec();
        let fwd = model.forward_with_values(&adj.matrix, &values, &g.node_features).unwrap();
        let d_logits = DenseMatrix::from_vec(1, 2, weights.clone()).unwrap();
        let (_, d_values) = model.backward_with_values(&adj.matrix, &values, &fwd, &d_logits, true).unwrap();
        let d_values = d_values.unwrap();
        for i in 0..values.len() {
            let (mut plus, mut minus) = (values.clone(), values.clone());
            plus[i] += 1e-5;
            minus[i] -= 1e-5;
            let numeric = (objective(&plus) - objective(&minus)) / 2e-5;
            let scale = numeric.abs().max(d_values[i].abs());
            let err = if scale < 1e-7 { (numeric - d_values[i]).abs() } else { (numeric - d_values[i]).abs() / scale };
            assert!(err <= TOLERANCE, "seed {} entry {}: {} vs {}", seed, i, d_values[i], numeric);
        }
    }
}
