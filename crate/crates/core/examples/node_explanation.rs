//! Explain a node of the Tree-Grid benchmark with a random walk with restart.
//!
//! cargo run -p gnnx-core --example node_explanation

use gnnx_core::graph::generate_tree_grid;
use gnnx_core::structural::{explain_node_in, RwrConfig};

fn main() -> gnnx_core::Result<()> {
    let data = generate_tree_grid(4, 3, 0)?;
    let graph = &data.graphs[0];
    // first node of the first grid
    let target = (1 << 4) - 1;
    let config = RwrConfig { top_k: 8, ..RwrConfig::default() };
    let explanation = explain_node_in(graph, target, &config)?;

    println!("target {} (converged: {})", explanation.target, explanation.converged);
    for node in &explanation.nodes {
        let label = graph.node_labels.as_ref().map_or(0, |l| l[node.id]);
        println!("  node {:>3}  score {:.4}  hop {:?}  label {}", node.id, node.score, node.hop, label);
    }
    println!("edges into the target:");
    for edge in explanation.edges.iter().filter(|e| e.dst == target) {
        println!("  {} -> {}  {:.3}", edge.src, edge.dst, edge.contribution);
    }
    Ok(())
}
