//! Sparse matrices in CSR form and sparse-dense products.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square sparse matrix in compressed sparse row form.
///
/// Column indices are sorted ascending within each row. Products over a row
/// accumulate sequentially in index order, so results are deterministic
/// regardless of thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row (column, value) lists; each list must be sorted and in range.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Argument(format!(
                "expected {n} rows, got {}",
                rows.len()
            )));
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &(j, v) in row {
                if j >= n {
                    return Err(Error::Argument(format!(
                        "column {j} out of range in row {i}"
                    )));
                }
                if let Some(p) = last {
                    if j <= p {
                        return Err(Error::Argument(format!(
                            "row {i} columns not strictly ascending"
                        )));
                    }
                }
                last = Some(j);
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// (columns, values) of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[a..b], &self.values[a..b])
    }

    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Sparse-dense product `self * dense`, parallel over output rows.
    pub fn mul_dense(&self, dense: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(
            dense.nrows(),
            self.n,
            "dimension mismatch in sparse-dense product"
        );
        let d = dense.ncols();
        let mut out = Array2::<f64>::zeros((self.n, d));
        let dense_std = dense.as_standard_layout();
        let dense_slice = dense_std.as_slice().expect("standard layout");
        out.axis_iter_mut(ndarray::Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut out_row)| {
                let (cols, vals) = self.row(i);
                let out_slice = out_row.as_slice_mut().expect("contiguous row");
                for (&j, &w) in cols.iter().zip(vals) {
                    let src = &dense_slice[j * d..(j + 1) * d];
                    for (o, &x) in out_slice.iter_mut().zip(src) {
                        *o += w * x;
                    }
                }
            });
        out
    }

    /// Dense copy, for small-instance oracles.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.n, self.n));
        for (i, j, v) in self.iter_entries() {
            out[[i, j]] = v;
        }
        out
    }
}

/// Mean of the first `k_hops` propagation steps: (1/K) * sum_{k=1..K} M^k V.
///
/// Powers of `matrix` are never materialized; each step is one sparse-dense
/// product on the running vector block.
pub fn k_hop_mean(matrix: &CsrMatrix, v: &ArrayView2<f64>, k_hops: usize) -> Result<Array2<f64>> {
    if k_hops == 0 {
        return Err(Error::Argument("k_hop_mean requires K >= 1".into()));
    }
    let mut current = matrix.mul_dense(v);
    let mut acc = current.clone();
    for _ in 1..k_hops {
        current = matrix.mul_dense(&current.view());
        acc += &current;
    }
    acc.mapv_inplace(|x| x / k_hops as f64);
    Ok(acc)
}
