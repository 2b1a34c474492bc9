//! Zero-fill incomplete LU factorization used as a Krylov preconditioner.

use super::csr::CsrMatrix;
use crate::{Error, Result};

/// ILU(0): an approximate factorization A ~= L U sharing A's sparsity
/// pattern, with unit lower-triangular L. Stored in a single CSR copy.
pub struct Ilu0 {
    factors: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols(), "ILU requires a square matrix");
        let mut f = a.clone();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (cols, _) = f.row(i);
            match cols.binary_search(&i) {
                Ok(k) => diag_pos[i] = f.row_ptr()[i] + k,
                Err(_) => {
                    return Err(Error::LinearSolve(format!(
                        "ILU(0): zero diagonal pattern at row {i}"
                    )))
                }
            }
        }
        // IKJ Gaussian elimination restricted to the existing pattern.
        let row_ptr = f.row_ptr().to_vec();
        let col_idx = f.col_idx().to_vec();
        let v = f.values_mut();
        for i in 0..n {
            let row_start = row_ptr[i];
            let row_end = row_ptr[i + 1];
            for kk in row_start..row_end {
                let k = col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = v[diag_pos[k]];
                if pivot == 0.0 {
                    return Err(Error::LinearSolve(format!(
                        "ILU(0): zero pivot at row {k}"
                    )));
                }
                let lik = v[kk] / pivot;
                v[kk] = lik;
                // Subtract lik * U(k, j) for j > k where (i, j) is in the pattern.
                let mut p = kk + 1;
                for jj in diag_pos[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[jj];
                    while p < row_end && col_idx[p] < j {
                        p += 1;
                    }
                    if p == row_end {
                        break;
                    }
                    if col_idx[p] == j {
                        v[p] -= lik * v[jj];
                    }
                }
            }
            if v[diag_pos[i]] == 0.0 {
                return Err(Error::LinearSolve(format!(
                    "ILU(0): zero pivot at row {i}"
                )));
            }
        }
        Ok(Self {
            factors: f,
            diag_pos,
        })
    }

    /// z = (L U)^-1 r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.factors.n_rows();
        let row_ptr = self.factors.row_ptr();
        let col_idx = self.factors.col_idx();
        let v = self.factors.values();
        z.copy_from_slice(r);
        // Forward solve with unit L.
        for i in 0..n {
            let mut s = z[i];
            for k in row_ptr[i]..self.diag_pos[i] {
                s -= v[k] * z[col_idx[k]];
            }
            z[i] = s;
        }
        // Backward solve with U.
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..row_ptr[i + 1] {
                s -= v[k] * z[col_idx[k]];
            }
            z[i] = s / v[self.diag_pos[i]];
        }
    }
}
