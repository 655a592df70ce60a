//! Shapley attributions on a distilled surrogate: exact enumeration against
//! Kernel SHAP, then a dataset-level ranking of features.
//!
//! cargo run -p gnnx-core --example feature_attribution

use gnnx_core::attribution::{exact_shapley, explain_node_features, summarize_attributions, DEFAULT_N_SAMPLES};
use gnnx_core::distill::distill_mlp;
use gnnx_core::gnn::train_gcn;
use gnnx_core::graph::generate_feature_clusters;
use gnnx_core::nn::TrainConfig;

fn main() -> gnnx_core::Result<()> {
    let data = generate_feature_clusters(200, 3, 6, 1)?;
    let config = TrainConfig { epochs: 200, learning_rate: 0.01, seed: 1, ..TrainConfig::default() };
    let (teacher, _) = train_gcn(&data, &config)?;
    let surrogate = distill_mlp(&teacher, &data, &config, 2.0)?;

    let node = 17;
    let kernel = explain_node_features(&surrogate, &data, node, DEFAULT_N_SAMPLES, 0)?;
    let x = data.graphs[0].node_features.row(node);
    let background = data.graphs[0].node_features.select_rows(&data.split.train).column_means();
    let exact = exact_shapley(&surrogate.student, x, &background, kernel.explained_class)?;
    println!("node {} explained class {}, base value {:.4}", node, kernel.explained_class, kernel.base_value);
    for (i, (k, e)) in kernel.phi.iter().zip(&exact.phi).enumerate() {
        println!("  feature {}  kernel {:+.5}  exact {:+.5}", i, k, e);
    }
    let f_x = surrogate.probabilities(x)?[kernel.explained_class];
    let gap = (exact.base_value + exact.phi.iter().sum::<f64>() - f_x).abs();
    println!("f(x) = {:.4}, efficiency gap {:.2e}", f_x, gap);

    let sample: Vec<usize> = data.split.test.clone();
    let summary = summarize_attributions(&surrogate, &data, &sample, 256, 0)?;
    println!("ranking over {} test nodes: {:?}", sample.len(), summary.ranking);
    println!("mean |phi|: {:.4?}", summary.mean_abs_phi);
    Ok(())
}
