//! Two-dimensional node positions from GCN embeddings by principal components.

use gnnx_core::gnn::{gcn_forward, GcnModel};
use gnnx_core::graph::{sym_normalized_adjacency, Graph};
use gnnx_core::nn::DenseMatrix;
use gnnx_core::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMethod {
    PcaEmbeddings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub method: LayoutMethod,
    pub positions: Vec<[f64; 2]>,
}

const ZERO_LOADING: f64 = 1e-12;

/// The two leading principal axes of the rows of `data`, as columns.
///
/// Each axis is flipped so its first non-negligible loading is positive.
/// Missing axes (fewer than two columns) are zero.
pub fn principal_axes(data: &DenseMatrix) -> DMatrix<f64> {
    let (n, dim) = (data.n_rows(), data.n_cols());
    let mut axes = DMatrix::zeros(dim, 2);
    if n == 0 || dim == 0 {
        return axes;
    }
    let means = data.column_means();
    let centered = DMatrix::from_fn(n, dim, |i, j| data[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    for (k, &col) in order.iter().take(2).enumerate() {
        let mut v = eig.eigenvectors.column(col).into_owned();
        if v.iter().find(|x| x.abs() > ZERO_LOADING).is_some_and(|&x| x < 0.0) {
            v.neg_mut();
        }
        axes.set_column(k, &v);
    }
    axes
}

/// Projects the centered rows of `data` onto their two leading principal axes.
pub fn pca_2d(data: &DenseMatrix) -> Vec<[f64; 2]> {
    let axes = principal_axes(data);
    let means = data.column_means();
    (0..data.n_rows())
        .map(|i| {
            let mut p = [0.0; 2];
            for (k, slot) in p.iter_mut().enumerate() {
                *slot = data.row(i).iter().zip(&means).enumerate().map(|(j, (x, m))| (x - m) * axes[(j, k)]).sum();
            }
            p
        })
        .collect()
}

/// Positions for every node of `graph` from the model's explanation embeddings.
pub fn layout_embeddings(model: &GcnModel, graph: &Graph) -> Result<LayoutResult> {
    if model.feature_dim() != graph.feature_dim() {
        return Err(Error::IncompatibleModel(format!(
            "model expects {} features, graph has {}",
            model.feature_dim(),
            graph.feature_dim()
        )));
    }
    let fwd = gcn_forward(model, &sym_normalized_adjacency(graph)?, &graph.node_features)?;
    Ok(LayoutResult { method: LayoutMethod::PcaEmbeddings, positions: pca_2d(model.explanation_embeddings(&fwd)) })
}
