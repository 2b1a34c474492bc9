//! Compressed sparse row storage with a reusable sparsity pattern.

use crate::{Error, Result};
use std::sync::Arc;

/// Sparse matrix in CSR form. Column indices are sorted within each row and
/// unique; duplicate triplets are summed during construction. The pattern is
/// reference-counted, so clones share index arrays and copy only the values.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Arc<Vec<usize>>,
    col_idx: Arc<Vec<usize>>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::LinearSolve(format!(
                    "triplet ({i},{j}) outside {n_rows}x{n_cols} matrix"
                )));
            }
        }
        // Counting sort by row, then sort-and-merge columns within each row.
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut order: Vec<usize> = vec![0; triplets.len()];
        {
            let mut next = counts.clone();
            for (k, &(i, _, _)) in triplets.iter().enumerate() {
                order[next[i]] = k;
                next[i] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..n_rows {
            scratch.clear();
            for &k in &order[counts[i]..counts[i + 1]] {
                let (_, j, v) = triplets[k];
                scratch.push((j, v));
            }
            scratch.sort_unstable_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in scratch.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr: Arc::new(row_ptr),
            col_idx: Arc::new(col_idx),
            values,
        })
    }

    /// Build from a prescribed sparsity pattern with zeroed values. Column
    /// indices must be sorted and unique within each row.
    pub fn from_pattern(n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Result<Self> {
        let n_rows = row_ptr.len() - 1;
        if *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::LinearSolve(
                "pattern row pointers do not match column index length".into(),
            ));
        }
        for i in 0..n_rows {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::LinearSolve(format!(
                        "pattern row {i} has unsorted or duplicate columns"
                    )));
                }
            }
            if let Some(&last) = cols.last() {
                if last >= n_cols {
                    return Err(Error::LinearSolve(format!(
                        "pattern row {i} references column {last} >= {n_cols}"
                    )));
                }
            }
        }
        let values = vec![0.0; col_idx.len()];
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr: Arc::new(row_ptr),
            col_idx: Arc::new(col_idx),
            values,
        })
    }

    /// Replace the value array wholesale (must match the pattern length).
    pub fn set_values(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.values.len());
        self.values.copy_from_slice(values);
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row slice as (columns, values).
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Reset all stored values to zero, keeping the pattern.
    pub fn zero_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Add into an entry that must already exist in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let k = self.col_idx[r.clone()]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i},{j}) not in sparsity pattern"));
        self.values[self.row_ptr[i] + k] += v;
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// Scale row i by r[i] and column j by c[j] in place.
    pub fn scale_rows_cols(&mut self, r: &[f64], c: &[f64]) {
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.values[k] *= r[i] * c[self.col_idx[k]];
            }
        }
    }

    /// Compressed sparse column view of the same matrix: (col_ptr, row_idx, values).
    pub fn to_csc(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut col_ptr = vec![0usize; self.n_cols + 1];
        for &j in self.col_idx.iter() {
            col_ptr[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut row_idx = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut next = col_ptr.clone();
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                row_idx[next[j]] = i;
                vals[next[j]] = self.values[k];
                next[j] += 1;
            }
        }
        (col_ptr, row_idx, vals)
    }
}
