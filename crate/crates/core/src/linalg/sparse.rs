use super::matrix::{ComplexMatrix, C64, ZERO};

/// Matrix-vector product that switches to compressed rows when at most a
/// third of the entries are nonzero. Exact zeros survive exponentiation of
/// structured generators, so this pays off for classical clocks.
#[derive(Debug, Clone)]
pub(crate) enum LinearOp {
    Dense(ComplexMatrix),
    Sparse {
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<C64>,
    },
}

impl LinearOp {
    pub(crate) fn new(m: ComplexMatrix) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let nnz = m.as_slice().iter().filter(|z| **z != ZERO).count();
        if nnz * 3 >= rows * cols {
            return LinearOp::Dense(m);
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (r, row) in m.as_slice().chunks_exact(cols).enumerate() {
            for (c, &z) in row.iter().enumerate() {
                if z != ZERO {
                    col_idx.push(c);
                    vals.push(z);
                }
            }
            debug_assert_eq!(row_ptr.len(), r + 1);
            row_ptr.push(col_idx.len());
        }
        LinearOp::Sparse {
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub(crate) fn apply(&self, v: &[C64], out: &mut [C64]) {
        match self {
            LinearOp::Dense(m) => m.matvec_into(v, out),
            LinearOp::Sparse {
                cols,
                row_ptr,
                col_idx,
                vals,
                ..
            } => {
                assert_eq!(v.len(), *cols, "matvec shape mismatch");
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = ZERO;
                    for idx in row_ptr[r]..row_ptr[r + 1] {
                        acc += vals[idx] * v[col_idx[idx]];
                    }
                    *o = acc;
                }
            }
        }
    }

    /// `vᵀ · self` as a row vector.
    pub(crate) fn left_apply(&self, v: &[C64]) -> Vec<C64> {
        match self {
            LinearOp::Dense(m) => m.transpose().matvec(v),
            LinearOp::Sparse {
                cols,
                row_ptr,
                col_idx,
                vals,
                ..
            } => {
                let mut out = vec![ZERO; *cols];
                for (r, &x) in v.iter().enumerate() {
                    for idx in row_ptr[r]..row_ptr[r + 1] {
                        out[col_idx[idx]] += x * vals[idx];
                    }
                }
                out
            }
        }
    }
}
