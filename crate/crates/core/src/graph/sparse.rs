use crate::nn::DenseMatrix;
use crate::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within a row and no explicit zeros
/// are stored, so two matrices with the same entries have identical layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Iterates `(row, col, value)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            (self.row_offsets[i]..self.row_offsets[i + 1]).map(move |k| (i, self.col_indices[k], self.values[k]))
        })
    }

    /// Storage position of entry `(i, j)`, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n_rows {
            return None;
        }
        let start = self.row_offsets[i];
        let cols = &self.col_indices[start..self.row_offsets[i + 1]];
        cols.binary_search(&j).ok().map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Same sparsity pattern with new values (in storage order).
    pub fn with_values(&self, values: Vec<f64>) -> Result<SparseMatrix> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch(format!("{} values for {} stored entries", values.len(), self.nnz())));
        }
        Ok(SparseMatrix { values, ..self.clone() })
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in increasing order keep the new column lists sorted
        for (i, j, v) in self.entries() {
            let k = next[j];
            col_indices[k] = i;
            values[k] = v;
            next[j] += 1;
        }
        SparseMatrix { n_rows: self.n_cols, n_cols: self.n_rows, row_offsets, col_indices, values }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (_, j, v) in self.entries() {
            sums[j] += v;
        }
        sums
    }

    /// `self * h` using `values` in place of the stored values.
    pub fn matmul_dense_with(&self, values: &[f64], h: &DenseMatrix) -> Result<DenseMatrix> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch(format!("{} values for {} stored entries", values.len(), self.nnz())));
        }
        if h.n_rows() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "sparse {}x{} times dense {}x{}",
                self.n_rows,
                self.n_cols,
                h.n_rows(),
                h.n_cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, h.n_cols());
        for i in 0..self.n_rows {
            let span = self.row_offsets[i]..self.row_offsets[i + 1];
            for (&a, &j) in values[span.clone()].iter().zip(&self.col_indices[span]) {
                let src = h.row(j);
                for (o, &x) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    pub fn matmul_dense(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul_dense_with(&self.values, h)
    }

    /// `selfᵀ * g` using `values` in place of the stored values.
    pub fn t_matmul_dense_with(&self, values: &[f64], g: &DenseMatrix) -> Result<DenseMatrix> {
        if values.len() != self.nnz() {
            return Err(Error::DimensionMismatch(format!("{} values for {} stored entries", values.len(), self.nnz())));
        }
        if g.n_rows() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "transposed sparse {}x{} times dense {}x{}",
                self.n_rows,
                self.n_cols,
                g.n_rows(),
                g.n_cols()
            )));
        }
        let mut out = DenseMatrix::zeros(self.n_cols, g.n_cols());
        for i in 0..self.n_rows {
            let span = self.row_offsets[i]..self.row_offsets[i + 1];
            for (&a, &j) in values[span.clone()].iter().zip(&self.col_indices[span]) {
                for (o, &x) in out.row_mut(j).iter_mut().zip(g.row(i)) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }
}

/// Builds a canonical CSR matrix from `(row, col)` pairs.
///
/// Every entry defaults to 1.0. Entries whose supplied value is exactly zero
/// are dropped.
pub fn build_csr(
    edges: &[(usize, usize)],
    n_rows: usize,
    n_cols: usize,
    values: Option<&[f64]>,
) -> Result<SparseMatrix> {
    if let Some(v) = values {
        if v.len() != edges.len() {
            return Err(Error::DimensionMismatch(format!("{} values for {} edges", v.len(), edges.len())));
        }
    }
    let mut triples: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len());
    for (k, &(i, j)) in edges.iter().enumerate() {
        if i >= n_rows {
            return Err(Error::OutOfRange { index: i, bound: n_rows });
        }
        if j >= n_cols {
            return Err(Error::OutOfRange { index: j, bound: n_cols });
        }
        triples.push((i, j, values.map_or(1.0, |v| v[k])));
    }
    triples.sort_by_key(|&(i, j, _)| (i, j));
    if let Some(w) = triples.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
        return Err(Error::DuplicateEdge(w[0].0, w[0].1));
    }
    let mut row_offsets = vec![0usize; n_rows + 1];
    let mut col_indices = Vec::with_capacity(triples.len());
    let mut vals = Vec::with_capacity(triples.len());
    for (i, j, v) in triples {
        if v == 0.0 {
            continue;
        }
        row_offsets[i + 1] += 1;
        col_indices.push(j);
        vals.push(v);
    }
    for i in 0..n_rows {
        row_offsets[i + 1] += row_offsets[i];
    }
    Ok(SparseMatrix { n_rows, n_cols, row_offsets, col_indices, values: vals })
}

/// Sparse matrix-vector product.
pub fn spmv(m: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != m.n_cols {
        return Err(Error::DimensionMismatch(format!("vector of length {} for {} columns", v.len(), m.n_cols)));
    }
    Ok((0..m.n_rows)
        .map(|i| {
            let (cols, vals) = m.row(i);
            cols.iter().zip(vals).map(|(&j, &a)| a * v[j]).sum()
        })
        .collect())
}
