//! Distil a node-classification GCN into a feature-only MLP surrogate.
//!
//! cargo run -p gnnx-core --example distillation

use gnnx_core::distill::{distill_mlp, fidelity_report, DEFAULT_TEMPERATURE};
use gnnx_core::gnn::train_gcn;
use gnnx_core::graph::generate_feature_clusters;
use gnnx_core::nn::TrainConfig;

fn main() -> gnnx_core::Result<()> {
    let data = generate_feature_clusters(300, 3, 8, 0)?;
    let config = |epochs| TrainConfig { epochs, learning_rate: 0.01, seed: 0, ..TrainConfig::default() };
    let (teacher, _) = train_gcn(&data, &config(200))?;
    let surrogate = distill_mlp(&teacher, &data, &config(300), DEFAULT_TEMPERATURE)?;
    println!("held-out fidelity at T = {}: {:.3}", surrogate.temperature, surrogate.fidelity);

    let report = fidelity_report(&surrogate, &teacher, &data)?;
    println!("train {:.3}  val {:.3}  test {:.3}  all {:.3}", report.train, report.val, report.test, report.all);
    Ok(())
}
