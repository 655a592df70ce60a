//! Drive the command line in-process: generate, train, distil and explain.
//!
//! cargo run --release -p gnnx-service --example cli_lifecycle

use gnnx_service::cli::run;

fn main() {
    let storage = tempfile::tempdir().unwrap();
    let root = storage.path().to_str().unwrap().to_owned();
    let steps: [&[&str]; 7] = [
        &["generate", "feature_clusters", "--num-nodes", "120", "--num-classes", "2", "--feature-dim", "4"],
        &["train", "--dataset", "feature_clusters", "--epochs", "100"],
        &["distill", "--dataset", "feature_clusters", "--epochs", "200"],
        &["explain-node", "--dataset", "feature_clusters", "--node", "3", "--top-k", "4"],
        &["attribute", "--dataset", "feature_clusters", "--node", "3", "--n-samples", "64"],
        &["generate", "ba2motifs", "--num-graphs", "20", "--base-size", "10", "--seed", "1"],
        &["train", "--dataset", "ba2motifs", "--epochs", "100"],
    ];
    for step in steps {
        let args = ["gnnx", "--storage-root", &root].into_iter().chain(step.iter().copied());
        println!("$ gnnx {}", step.join(" "));
        let code = run(args);
        assert_eq!(code, 0, "step failed");
    }
    println!("$ gnnx explain-graph --dataset ba2motifs --graph 0 --top-k 5");
    run(["gnnx", "--storage-root", &root, "explain-graph", "--dataset", "ba2motifs", "--graph", "0", "--top-k", "5"]);
}
