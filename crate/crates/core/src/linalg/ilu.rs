use super::CscMatrix;
use crate::error::{FbiError, Result};

/// Incomplete LU factorization without fill, stored row-wise. `L` has a unit
/// diagonal and shares the arrays with `U`.
#[derive(Debug, Clone)]
pub(crate) struct Ilu0 {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CscMatrix) -> Result<Self> {
        let n = a.nrows();
        let (col_ptr, row_idx, vals) = (a.col_ptr(), a.row_idx(), a.values());
        let mut row_ptr = vec![0; n + 1];
        for &r in row_idx {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0; row_idx.len()];
        let mut values = vec![0.0; row_idx.len()];
        // columns are visited in order, so column indices come out sorted per row
        for c in 0..a.ncols() {
            for p in col_ptr[c]..col_ptr[c + 1] {
                let r = row_idx[p];
                col_idx[next[r]] = c;
                values[next[r]] = vals[p];
                next[r] += 1;
            }
        }
        let mut diag = vec![0; n];
        for i in 0..n {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            diag[i] = row_ptr[i]
                + row
                    .binary_search(&i)
                    .map_err(|_| FbiError::LinearSolver(format!("ILU(0): row {i} has no diagonal entry")))?;
        }

        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for p in start..end {
                marker[col_idx[p]] = p;
            }
            for p in start..diag[i] {
                let k = col_idx[p];
                let pivot = values[diag[k]];
                let lik = values[p] / pivot;
                values[p] = lik;
                if lik == 0.0 {
                    continue;
                }
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let m = marker[col_idx[q]];
                    if m != usize::MAX {
                        values[m] -= lik * values[q];
                    }
                }
            }
            let d = values[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(FbiError::LinearSolver(format!("ILU(0): zero pivot in row {i}")));
            }
            for p in start..end {
                marker[col_idx[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 {
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }

    /// Overwrites `x` with `(LU)^{-1} x`.
    pub fn apply(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut s = x[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * x[self.col_idx[p]];
            }
            x[i] = s / self.values[self.diag[i]];
        }
    }
}
