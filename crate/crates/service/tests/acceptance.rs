//! Acceptance suite: one PASS/FAIL line per headline criterion.
//!
//! Run with `cargo test -p gnnx-service --test acceptance`.

mod common;
#[path = "../../core/tests/common/mod.rs"]
mod core_common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use axum::http::StatusCode;
use core_common::{graph_dataset, max_gradient_error, node_dataset, random_graph, rng};
use gnnx_core::attribution::{exact_shapley, kernel_shap, ClassProbability, ScalarFunction, ShapleyValues};
use gnnx_core::attribution::{exact_shapley_values, kernel_shap_values};
use gnnx_core::distill::{distill_loss_and_grads, distill_mlp, DEFAULT_TEMPERATURE};
use gnnx_core::gnn::{
    gcn_forward, gcn_loss_and_grads, joint_loss_and_grads, masked_gcn_forward, prepare_graphs, train_gcn,
    train_self_explainable, EdgeMask, GcnModel, JointContext, MaskOptions, SelfExplainableGcn, DEFAULT_SPARSITY_WEIGHT,
};
use gnnx_core::graph::{
    column_normalized_adjacency, generate_ba2motifs, generate_feature_clusters, sym_normalized_adjacency, Graph, Task,
};
use gnnx_core::nn::{softmax_with_temperature, Activation, DenseMatrix, MlpParams, Parameters, TrainConfig};
use gnnx_core::reference::{find_references, EmbeddingIndex, Metric};
use gnnx_core::structural::{explain_node_in, motif_recovery, rwr, RwrConfig, RwrIterations, SelectionStrategy};
use gnnx_core::Error;
use gnnx_service::{Api, Registry};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Column-stochastic transition built from out-degrees, with self-loops on dangling nodes.
fn dense_transition(g: &Graph) -> DMatrix<f64> {
    let n = g.node_count;
    let mut a = DMatrix::zeros(n, n);
    for &(s, d) in &g.edges {
        a[(d, s)] = 1.0;
        if !g.directed {
            a[(s, d)] = 1.0;
        }
    }
    for j in 0..n {
        let out: f64 = a.column(j).sum();
        if out == 0.0 {
            a[(j, j)] = 1.0;
        } else {
            for i in 0..n {
                a[(i, j)] /= out;
            }
        }
    }
    a
}

struct RwrCase {
    graph: Graph,
    r0: Vec<f64>,
    d: f64,
}

fn rwr_corpus() -> Vec<RwrCase> {
    (0..100)
        .map(|seed| {
            let mut r = rng(seed);
            let n = r.random_range(1..=8);
            let directed = r.random_bool(0.5);
            let graph = random_graph(n, r.random_range(0.1..0.7), directed, 1, &mut r);
            let mut r0 = vec![0.0; n];
            if r.random_bool(0.5) {
                r0[r.random_range(0..n)] = 1.0;
            } else {
                let raw: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                r0 = raw.iter().map(|x| x / total).collect();
            }
            RwrCase { graph, r0, d: r.random_range(0.0..0.95) }
        })
        .collect()
}

fn rwr_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (i, case) in rwr_corpus().iter().enumerate() {
        let adj = column_normalized_adjacency(&case.graph).map_err(|e| e.to_string())?;
        let config = RwrConfig { d: case.d, ..RwrConfig::default() };
        let result = rwr(&adj, &case.r0, &config).map_err(|e| e.to_string())?;
        let n = case.graph.node_count;
        let system = DMatrix::identity(n, n) - dense_transition(&case.graph) * case.d;
        let rhs = DVector::from_vec(case.r0.clone()) * (1.0 - case.d);
        let exact = system.lu().solve(&rhs).ok_or("singular system")?;
        let l1: f64 = result.scores.iter().zip(exact.iter()).map(|(a, b)| (a - b).abs()).sum();
        ensure(l1 <= 1e-6, || format!("case {}: L1 error {:.3e}", i, l1))?;
        worst = worst.max(l1);
    }
    let elapsed = start.elapsed();

    let path = Graph::new(2, vec![(0, 1)], false, DenseMatrix::zeros(2, 1)).map_err(|e| e.to_string())?;
    let adj = column_normalized_adjacency(&path).map_err(|e| e.to_string())?;
    let closed = rwr(&adj, &[1.0, 0.0], &RwrConfig { d: 0.5, ..RwrConfig::default() }).map_err(|e| e.to_string())?;
    let err = (closed.scores[0] - 2.0 / 3.0).abs().max((closed.scores[1] - 1.0 / 3.0).abs());
    ensure(err <= 1e-9, || format!("2-node closed form off by {:.3e}", err))?;
    let explanation = explain_node_in(&path, 0, &RwrConfig { d: 0.5, top_k: 2, ..RwrConfig::default() })
        .map_err(|e| e.to_string())?;
    let inflow: Vec<f64> = explanation.edges.iter().filter(|e| e.dst == 0).map(|e| e.contribution).collect();
    ensure(inflow.len() == 1 && (inflow[0] - 1.0).abs() <= 1e-9, || format!("in-edge contributions {:?}", inflow))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("corpus took {:?}", elapsed))?;
    Ok(format!("100 graphs, max L1 {:.2e}, closed form off by {:.1e}, {:?}", worst, err, elapsed))
}

fn probability_conservation() -> Outcome {
    let mut worst = 0.0f64;
    let mut iterates = 0usize;
    for (i, case) in rwr_corpus().iter().enumerate() {
        let adj = column_normalized_adjacency(&case.graph).map_err(|e| e.to_string())?;
        let used = rwr(&adj, &case.r0, &RwrConfig { d: case.d, ..RwrConfig::default() })
            .map_err(|e| e.to_string())?
            .iterations_used;
        for (t, r) in RwrIterations::new(&adj, &case.r0, case.d).map_err(|e| e.to_string())?.take(used).enumerate() {
            let gap = (r.iter().sum::<f64>() - 1.0).abs();
            ensure(gap <= 1e-9, || format!("case {} iterate {}: sum off by {:.3e}", i, t + 1, gap))?;
            worst = worst.max(gap);
            iterates += 1;
        }
    }
    Ok(format!("{} iterates, max |sum - 1| {:.2e}", iterates, worst))
}

fn random_self_explainable(task: Task, feature_dim: usize, r: &mut impl Rng) -> SelfExplainableGcn {
    let hidden: Vec<usize> = (0..r.random_range(1..3)).map(|_| r.random_range(2..6)).collect();
    let teacher = GcnModel::init(task, feature_dim, &hidden, r.random_range(2..4), r).unwrap();
    SelfExplainableGcn::from_teacher(&teacher, &MaskOptions { hidden_dim: 4, init_bias: r.random_range(-2.0..2.0) }, r)
        .unwrap()
}

fn mask_identity() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50 {
        let mut r = rng(1000 + seed);
        let task = if seed % 2 == 0 { Task::NodeClassification } else { Task::GraphClassification };
        let g = random_graph(r.random_range(1..9), 0.4, false, 3, &mut r);
        let model = random_self_explainable(task, 3, &mut r);
        let adj = sym_normalized_adjacency(&g).map_err(|e| e.to_string())?;
        let plain = gcn_forward(&model.base, &adj, &g.node_features).map_err(|e| e.to_string())?;
        let masked = masked_gcn_forward(&model, &adj, &g.node_features, &EdgeMask::ones(adj.matrix.nnz()))
            .map_err(|e| e.to_string())?;
        let diff = plain.logits.max_abs_diff(&masked.logits);
        ensure(diff <= 1e-12, || format!("model {}: max difference {:.3e}", seed, diff))?;
        worst = worst.max(diff);
    }
    Ok(format!("50 models, max |difference| {:.1e}", worst))
}

fn jitter<P: Parameters>(params: &mut P, scale: f64, r: &mut impl Rng) {
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v += r.random_range(-scale..scale));
    }
}

fn gradient_checks() -> Outcome {
    let (mut gcn, mut joint, mut surrogate) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..3 {
        for task in [Task::NodeClassification, Task::GraphClassification] {
            let mut r = rng(2000 + seed);
            let data = match task {
                Task::NodeClassification => node_dataset(4, 3, 2, &mut r),
                Task::GraphClassification => graph_dataset(3, 4, 3, 2, &mut r),
            };
            let hidden: &[usize] = if task == Task::NodeClassification { &[4] } else { &[4, 4] };
            let items = &data.split.train;

            let mut model = GcnModel::init(task, 3, hidden, 2, &mut r).unwrap();
            jitter(&mut model, 0.1, &mut r);
            let prepared = prepare_graphs(&data).unwrap();
            let (_, grads) = gcn_loss_and_grads(&model, &prepared, &data, items).unwrap();
            gcn = gcn
                .max(max_gradient_error(&model, &grads, |m| gcn_loss_and_grads(m, &prepared, &data, items).unwrap().0));

            let teacher = GcnModel::init(task, 3, hidden, 2, &mut r).unwrap();
            let mut se =
                SelfExplainableGcn::from_teacher(&teacher, &MaskOptions { hidden_dim: 5, init_bias: 0.3 }, &mut r)
                    .unwrap();
            jitter(&mut se, 0.2, &mut r);
            let ctx = JointContext::new(&teacher, &data, 0.7).unwrap();
            let (_, grads) = joint_loss_and_grads(&se, &ctx, &data, items).unwrap();
            joint =
                joint.max(max_gradient_error(&se, &grads, |m| joint_loss_and_grads(m, &ctx, &data, items).unwrap().0));
        }
        let mut r = rng(2100 + seed);
        let student = MlpParams::init(&[3, 6, 3], vec![Activation::Relu, Activation::Identity], &mut r).unwrap();
        let x = DenseMatrix::from_vec(4, 3, (0..12).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let targets: Vec<Vec<f64>> = (0..4)
            .map(|_| softmax_with_temperature(&[r.random_range(-2.0..2.0), r.random(), r.random()], 2.0))
            .collect();
        let (_, grads) = distill_loss_and_grads(&student, &x, &targets, 2.0).unwrap();
        surrogate = surrogate
            .max(max_gradient_error(&student, &grads, |s| distill_loss_and_grads(s, &x, &targets, 2.0).unwrap().0));
    }
    let detail =
        format!("max relative error: GCN {:.1e}, student + mask MLP {:.1e}, surrogate {:.1e}", gcn, joint, surrogate);
    ensure(gcn.max(joint).max(surrogate) <= 1e-4, || detail.clone())?;
    Ok(detail)
}

fn efficiency_gap(f: &dyn Fn(&[f64]) -> f64, x: &[f64], v: &ShapleyValues) -> f64 {
    (v.base_value + v.phi.iter().sum::<f64>() - f(x)).abs()
}

fn shapley_correctness() -> Outcome {
    let mut worst_match = 0.0f64;
    let mut worst_efficiency = 0.0f64;
    let mut emitted = 0usize;
    for d in 1..=10 {
        let mut r = rng(3000 + d as u64);
        let mlp = MlpParams::init(&[d, 6, 3], vec![Activation::Relu, Activation::Identity], &mut r).unwrap();
        let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let bg: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let class = d % 3;
        let f = ClassProbability::new(&mlp, class).unwrap();
        let exact = exact_shapley(&mlp, &x, &bg, class).map_err(|e| e.to_string())?;
        let full = kernel_shap(&mlp, &x, &bg, class, (1usize << d).max(2 * d), 11).map_err(|e| e.to_string())?;
        let sampled = kernel_shap(&mlp, &x, &bg, class, 2 * d + 8, 11).map_err(|e| e.to_string())?;
        for (a, b) in exact.phi.iter().zip(&full.phi) {
            worst_match = worst_match.max((a - b).abs());
        }
        for attribution in [&exact, &full, &sampled] {
            let gap = (attribution.base_value + attribution.phi.iter().sum::<f64>() - f.evaluate(&x)).abs();
            worst_efficiency = worst_efficiency.max(gap);
            emitted += 1;
        }
    }
    ensure(worst_match <= 1e-6, || format!("kernel vs exact differ by {:.3e}", worst_match))?;

    let linear = |v: &[f64]| 2.0 * v[0] + 3.0 * v[1];
    let mut worst_linear = 0.0f64;
    for values in [
        exact_shapley_values(&linear, &[1.0, 1.0], &[0.0, 0.0]),
        kernel_shap_values(&linear, &[1.0, 1.0], &[0.0, 0.0], 64, 0),
    ] {
        let v = values.map_err(|e| e.to_string())?;
        worst_linear = worst_linear.max((v.phi[0] - 2.0).abs()).max((v.phi[1] - 3.0).abs());
        worst_efficiency = worst_efficiency.max(efficiency_gap(&linear, &[1.0, 1.0], &v));
        emitted += 1;
    }
    ensure(worst_linear <= 1e-9, || format!("linear case off by {:.3e}", worst_linear))?;
    ensure(worst_efficiency <= 1e-6, || format!("efficiency gap {:.3e}", worst_efficiency))?;
    Ok(format!(
        "d <= 10 kernel vs exact {:.1e}, linear {:.1e}, efficiency {:.1e} over {} attributions",
        worst_match, worst_linear, worst_efficiency, emitted
    ))
}

fn explanation_quality() -> Outcome {
    let start = Instant::now();
    let data = generate_ba2motifs(50, 20, 7).map_err(|e| e.to_string())?;
    let cfg = TrainConfig { epochs: 300, learning_rate: 0.01, seed: 7, ..TrainConfig::default() };
    let (teacher, _) = train_gcn(&data, &cfg).map_err(|e| e.to_string())?;
    let model = train_self_explainable(&teacher, &data, &cfg, DEFAULT_SPARSITY_WEIGHT).map_err(|e| e.to_string())?;
    let rec = motif_recovery(&model, &data).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let detail = format!(
        "ROC-AUC {:.4}, motif mean {:.4} vs base mean {:.4}, accuracy {:.2}, {:.1?}",
        rec.auc, rec.motif_mean, rec.base_mean, rec.accuracy, elapsed
    );
    ensure(rec.motif_mean > rec.base_mean && rec.auc >= 0.75 && elapsed.as_secs() < 300, || detail.clone())?;
    Ok(detail)
}

fn distillation_fidelity() -> Outcome {
    let data = generate_feature_clusters(300, 3, 8, 0).map_err(|e| e.to_string())?;
    let cfg = |epochs| TrainConfig { epochs, learning_rate: 0.01, seed: 0, ..TrainConfig::default() };
    let (teacher, _) = train_gcn(&data, &cfg(200)).map_err(|e| e.to_string())?;
    let bundle = distill_mlp(&teacher, &data, &cfg(300), DEFAULT_TEMPERATURE).map_err(|e| e.to_string())?;
    let detail = format!("held-out agreement {:.3} on 300 nodes, 3 classes", bundle.fidelity);
    ensure(bundle.fidelity >= 0.9, || detail.clone())?;
    Ok(detail)
}

fn retrieval_exactness() -> Outcome {
    let mut r = rng(4000);
    let data = graph_dataset(12, 5, 3, 2, &mut r);
    let model = random_self_explainable(Task::GraphClassification, 3, &mut r);
    let mut compared = 0usize;
    for case in 0..100 {
        let n = r.random_range(2..=12);
        let dim = r.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-2..=2) as f64).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let index = EmbeddingIndex::new(DenseMatrix::from_rows(&rows).unwrap(), labels.clone(), (0..n).collect())
            .map_err(|e| e.to_string())?;
        let query = r.random_range(0..n);
        let mut scan: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != query)
            .map(|i| (rows[query].iter().zip(&rows[i]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
            .collect();
        scan.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let same = scan.iter().find(|(_, i)| labels[*i] == labels[query]).copied();
        let diff = scan.iter().find(|(_, i)| labels[*i] != labels[query]).copied();
        let strategy = SelectionStrategy::TopK(3);
        match (find_references(&index, query, Metric::Euclidean, &model, &data, strategy), same, diff) {
            (Ok(refs), Some(s), Some(d)) => {
                let got = (
                    (refs.same_class.distance, refs.same_class.explanation.graph_id),
                    (refs.diff_class.distance, refs.diff_class.explanation.graph_id),
                );
                ensure(got == (s, d), || format!("case {}: got {:?}, scan found {:?}", case, got, (s, d)))?;
                compared += 1;
            }
            (Err(Error::NoSameClassItem(_)), None, _) | (Err(Error::NoDiffClassItem(_)), Some(_), None) => {}
            (other, s, d) => return Err(format!("case {}: {:?} but scan found {:?}", case, other.map(|_| ()), (s, d))),
        }
    }
    Ok(format!("100 random indices agree with the exhaustive scan ({} with both references)", compared))
}

fn service_contract() -> Outcome {
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().unwrap();
    runtime.block_on(async {
        let api = common::api(common::storage());
        let requests: Vec<(&str, &str, Option<&str>)> = vec![
            ("health", "/api/health", None),
            ("datasets", "/api/datasets", None),
            ("graph_view", "/api/datasets/tree_grid/graph/0?layout=pca", None),
            ("node_explanation", "/api/explain/node", Some(r#"{"dataset_id":"tree_grid","node_id":5,"top_k":6}"#)),
            (
                "graph_explanation",
                "/api/explain/graph",
                Some(r#"{"dataset_id":"ba2motifs","graph_id":1,"strategy":"top_k","value":6}"#),
            ),
            (
                "feature_attribution",
                "/api/explain/features",
                Some(r#"{"dataset_id":"clusters","node_id":7,"n_samples":64,"seed":1}"#),
            ),
            ("attribution_summary", "/api/explain/features/summary", Some(r#"{"dataset_id":"clusters","seed":4}"#)),
            ("reference_set", "/api/examples/ba2motifs/4", None),
            ("error", "/api/explain/node", Some(r#"{"dataset_id":"tree_grid"}"#)),
            ("error", "/api/explain/node", Some(r#"{"dataset_id":"missing","node_id":0}"#)),
        ];
        for (schema, uri, body) in &requests {
            let send = || async {
                match body {
                    Some(b) => common::post(&api, uri, b).await,
                    None => common::get(&api, uri).await,
                }
            };
            let (status, first) = send().await;
            let (_, second) = send().await;
            let errors = common::schema_errors(schema, &first);
            ensure(errors.is_empty(), || format!("{} ({}) violates `{}`: {:?}", uri, status, schema, errors))?;
            ensure(first == second, || format!("{} is not byte-identical on repeat", uri))?;
            ensure((*schema == "error") != (status == StatusCode::OK), || format!("{} returned {}", uri, status))?;
        }

        let registry = Arc::new(Registry::new(common::storage()));
        let fresh = Api::new(registry.clone());
        let body = r#"{"dataset_id":"ba2motifs","graph_id":2,"strategy":"top_k","value":3}"#;
        let handles: Vec<_> = (0..10)
            .map(|_| {
                let api = fresh.clone();
                tokio::spawn(async move { common::post(&api, "/api/explain/graph", body).await })
            })
            .collect();
        for h in handles {
            let (status, _) = h.await.map_err(|e| e.to_string())?;
            ensure(status == StatusCode::OK, || format!("concurrent request returned {}", status))?;
        }
        ensure(registry.file_loads() == 2, || {
            format!("{} file loads for one dataset and one checkpoint", registry.file_loads())
        })?;
        Ok(format!(
            "{} endpoint responses validate and repeat byte-identically; 10 concurrent requests, 2 file loads",
            requests.len()
        ))
    })
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("RWR correctness", rwr_correctness),
        ("Probability conservation", probability_conservation),
        ("Mask identity", mask_identity),
        ("Gradient checks", gradient_checks),
        ("Shapley correctness", shapley_correctness),
        ("Explanation quality at desk scale", explanation_quality),
        ("Distillation fidelity", distillation_fidelity),
        ("Retrieval exactness", retrieval_exactness),
        ("Service contract", service_contract),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {}", msg))
        });
        match outcome {
            Ok(detail) => println!("PASS {}: {}", name, detail),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}: {}", name, detail);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
