//! Retrieve the nearest same-class and different-class graphs for a query
//! and explain both with the self-explainable model.
//!
//! cargo run --release -p gnnx-core --example references

use gnnx_core::gnn::{train_gcn, train_self_explainable, DEFAULT_SPARSITY_WEIGHT};
use gnnx_core::graph::generate_ba2motifs;
use gnnx_core::nn::TrainConfig;
use gnnx_core::reference::{build_index, find_references, Metric};
use gnnx_core::structural::SelectionStrategy;

fn main() -> gnnx_core::Result<()> {
    let data = generate_ba2motifs(50, 20, 7)?;
    let config = TrainConfig { epochs: 300, learning_rate: 0.01, seed: 7, ..TrainConfig::default() };
    let (teacher, _) = train_gcn(&data, &config)?;
    let model = train_self_explainable(&teacher, &data, &config, DEFAULT_SPARSITY_WEIGHT)?;
    let index = build_index(&model, &data)?;

    for query in [0, 1] {
        let refs = find_references(&index, query, Metric::Euclidean, &model, &data, SelectionStrategy::TopK(6))?;
        println!("query {} (predicted {})", query, index.label_of(query)?);
        for (kind, r) in [("same class", &refs.same_class), ("different class", &refs.diff_class)] {
            println!(
                "  {:<15} graph {:>2}  distance {:.4}  predicted {}  selected {:?}",
                kind,
                r.explanation.graph_id,
                r.distance,
                r.explanation.predicted_class,
                r.explanation.selected_edges()
            );
        }
    }
    Ok(())
}
