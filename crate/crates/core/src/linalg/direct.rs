//! Sparse LU factorization (faer) with symbolic-analysis reuse.

use super::csr::CsrMatrix;
use crate::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};

/// Direct solver that caches the fill-reducing symbolic analysis: repeated
/// factorizations of matrices with an identical sparsity pattern (Newton
/// iterations, time steps) only redo the numeric phase.
#[derive(Default)]
pub struct DirectLu {
    symbolic: Option<CachedSymbolic>,
}

struct CachedSymbolic {
    n: usize,
    nnz: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    analysis: SymbolicLu<usize>,
}

impl DirectLu {
    pub fn new() -> Self {
        Self::default()
    }

    /// Factor `a` and solve for each right-hand side column in place.
    pub fn solve_in_place(&mut self, a: &CsrMatrix, rhs: &mut [f64]) -> Result<()> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols(), "direct solve requires a square matrix");
        assert_eq!(rhs.len() % n.max(1), 0);
        let (col_ptr, row_idx, vals) = a.to_csc();

        let reuse = match &self.symbolic {
            Some(c) => c.n == n && c.nnz == a.nnz() && c.col_ptr == col_ptr && c.row_idx == row_idx,
            None => false,
        };
        if !reuse {
            let sym = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
            let analysis = SymbolicLu::try_new(sym)
                .map_err(|e| Error::LinearSolve(format!("LU symbolic analysis: {e:?}")))?;
            self.symbolic = Some(CachedSymbolic {
                n,
                nnz: a.nnz(),
                col_ptr,
                row_idx,
                analysis,
            });
        }
        let cached = self.symbolic.as_ref().unwrap();
        let sym = SymbolicSparseColMatRef::new_checked(n, n, &cached.col_ptr, None, &cached.row_idx);
        let mat = SparseColMatRef::new(sym, &vals);
        let lu = Lu::try_new_with_symbolic(cached.analysis.clone(), mat)
            .map_err(|e| Error::LinearSolve(format!("LU factorization: {e:?}")))?;
        let ncols = rhs.len() / n.max(1);
        let rhs_mat = faer::MatMut::from_column_major_slice_mut(rhs, n, ncols);
        lu.solve_in_place(rhs_mat);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_reuses_symbolic() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 3.0 + (i as f64) * 0.1));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.25));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let x_ref: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut rhs = a.matvec(&x_ref);
        let mut lu = DirectLu::new();
        lu.solve_in_place(&a, &mut rhs).unwrap();
        for i in 0..n {
            assert!((rhs[i] - x_ref[i]).abs() < 1e-12);
        }
        // Same pattern, different values: symbolic phase is reused.
        let mut a2 = a.clone();
        a2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let mut rhs2 = a2.matvec(&x_ref);
        lu.solve_in_place(&a2, &mut rhs2).unwrap();
        for i in 0..n {
            assert!((rhs2[i] - x_ref[i]).abs() < 1e-12);
        }
    }
}
