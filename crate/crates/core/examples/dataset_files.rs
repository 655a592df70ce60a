//! Generate the synthetic benchmarks, write them in the dataset file format
//! and read one back.
//!
//! cargo run -p gnnx-core --example dataset_files

use gnnx_core::graph::{
    column_normalized_adjacency, generate_ba2motifs, generate_feature_clusters, generate_tree_grid, DatasetBundle,
};

fn main() -> gnnx_core::Result<()> {
    let dir = std::env::temp_dir().join("gnnx-dataset-files");
    std::fs::create_dir_all(&dir)?;
    for data in
        [generate_tree_grid(8, 80, 0)?, generate_ba2motifs(50, 20, 0)?, generate_feature_clusters(300, 3, 8, 0)?]
    {
        let path = dir.join(format!("{}.json", data.id));
        data.save(&path)?;
        let nodes: usize = data.graphs.iter().map(|g| g.node_count).sum();
        println!(
            "{:<16} {:?}, {} graphs, {} nodes -> {}",
            data.id,
            data.task,
            data.graphs.len(),
            nodes,
            path.display()
        );
    }

    let back = DatasetBundle::load(dir.join("ba2motifs.json"))?;
    let first = &back.graphs[0];
    let adj = column_normalized_adjacency(first)?;
    let column_sums = adj.matrix.column_sums();
    println!(
        "ba2motifs graph 0: {} edges, {} ground-truth edges, column sums in [{:.3}, {:.3}]",
        first.edges.len(),
        first.ground_truth_edges.as_ref().map_or(0, Vec::len),
        column_sums.iter().cloned().fold(f64::INFINITY, f64::min),
        column_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(())
}
