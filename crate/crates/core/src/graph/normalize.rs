use serde::{Deserialize, Serialize};

use super::sparse::{build_csr, SparseMatrix};
use super::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    ColumnNormalized,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub matrix: SparseMatrix,
    pub mode: NormalizationMode,
}

/// Transposed row-normalized adjacency: entry `[j, i]` is `1 / outdeg(i)` for
/// every edge `i -> j`, so each column sums to one. Nodes without out-edges
/// get a self-loop first so no probability mass leaks.
pub fn column_normalized_adjacency(graph: &Graph) -> Result<NormalizedAdjacency> {
    if graph.node_count == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut pairs = graph.directed_pairs();
    let mut out_degree = vec![0usize; graph.node_count];
    for &(s, _) in &pairs {
        out_degree[s] += 1;
    }
    for (i, deg) in out_degree.iter_mut().enumerate() {
        if *deg == 0 {
            pairs.push((i, i));
            *deg = 1;
        }
    }
    let values: Vec<f64> = pairs.iter().map(|&(s, _)| 1.0 / out_degree[s] as f64).collect();
    let row_normalized = build_csr(&pairs, graph.node_count, graph.node_count, Some(&values))?;
    Ok(NormalizedAdjacency { matrix: row_normalized.transpose(), mode: NormalizationMode::ColumnNormalized })
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the row sums of `A + I`.
pub fn sym_normalized_adjacency(graph: &Graph) -> Result<NormalizedAdjacency> {
    if graph.node_count == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = graph.node_count;
    let adjacency = graph.adjacency()?;
    let mut pairs = Vec::with_capacity(adjacency.nnz() + n);
    let mut values = Vec::with_capacity(adjacency.nnz() + n);
    for i in 0..n {
        let (cols, vals) = adjacency.row(i);
        let mut diagonal_seen = false;
        for (&j, &v) in cols.iter().zip(vals) {
            let v = if j == i {
                diagonal_seen = true;
                v + 1.0
            } else {
                v
            };
            pairs.push((i, j));
            values.push(v);
        }
        if !diagonal_seen {
            pairs.push((i, i));
            values.push(1.0);
        }
    }
    let with_loops = build_csr(&pairs, n, n, Some(&values))?;
    let degree = with_loops.row_sums();
    let normalized: Vec<f64> = with_loops.entries().map(|(i, j, v)| v / (degree[i] * degree[j]).sqrt()).collect();
    Ok(NormalizedAdjacency { matrix: with_loops.with_values(normalized)?, mode: NormalizationMode::Symmetric })
}
