use super::{ComplexMatrix, C64, ZERO};

/// Compressed-row view of an operator.
///
/// Only the integrator builds these, once per run, from dense operators whose
/// structure (ladder operators, Pauli factors) leaves most entries zero.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Keeps every entry that is not exactly zero.
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        let (rows, cols) = m.shape();
        let data = m.as_slice();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..rows {
            for j in 0..cols {
                let v = data[i * cols + j];
                if v != ZERO {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[(i, self.col_idx[k])] = self.values[k];
            }
        }
        out
    }

    /// `out += alpha · self · b` for row-major `b` (cols × m) and `out` (rows × m).
    pub fn mul_dense_acc(&self, alpha: C64, b: &[C64], m: usize, out: &mut [C64]) {
        debug_assert_eq!(b.len(), self.cols * m);
        debug_assert_eq!(out.len(), self.rows * m);
        for i in 0..self.rows {
            let out_row = &mut out[i * m..(i + 1) * m];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = alpha * self.values[k];
                let j = self.col_idx[k];
                let b_row = &b[j * m..(j + 1) * m];
                for (o, &x) in out_row.iter_mut().zip(b_row) {
                    *o += a * x;
                }
            }
        }
    }

    /// `out += alpha · b · self†` for row-major `b` (m × cols) and `out` (m × rows).
    pub fn dense_mul_adjoint_acc(&self, alpha: C64, b: &[C64], m: usize, out: &mut [C64]) {
        debug_assert_eq!(b.len(), m * self.cols);
        debug_assert_eq!(out.len(), m * self.rows);
        // (b·S†)_{r,i} = Σ_j b_{r,j} · conj(S_{i,j})
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = alpha * self.values[k].conj();
                let j = self.col_idx[k];
                for r in 0..m {
                    out[r * self.rows + i] += a * b[r * self.cols + j];
                }
            }
        }
    }
}
