//! Compressed-row operator storage for the time-stepping hot path.
//!
//! Matrices are applied to column-major `d x d` buffers. All model operators are
//! excitation-conserving or single-quantum ladders, so rows carry a handful of
//! nonzeros and these kernels cost `O(nnz * d)` instead of `O(d^3)`.

use faer::{c64, Mat};

#[derive(Debug, Clone)]
pub(crate) struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<c64>,
}

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

impl SparseOp {
    pub(crate) fn from_dense(m: &Mat<c64>) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != ZERO {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub(crate) fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            vals: vec![c64::new(1.0, 0.0); dim],
        }
    }

    /// Iterates `(row, col, value)` over stored entries.
    pub(crate) fn entries(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    fn row(&self, r: usize) -> (&[usize], &[c64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// `out += coef * A * x` for column-major square `x`.
    pub(crate) fn left_mul_acc(&self, coef: c64, x: &[c64], out: &mut [c64]) {
        let d = self.dim;
        for c in 0..d {
            let xc = &x[c * d..(c + 1) * d];
            let oc = &mut out[c * d..(c + 1) * d];
            for (r, o) in oc.iter_mut().enumerate() {
                let (cols, vals) = self.row(r);
                let mut acc = ZERO;
                for (&k, &v) in cols.iter().zip(vals) {
                    acc += v * xc[k];
                }
                *o += coef * acc;
            }
        }
    }

    /// `out += coef * x * A^dagger` for column-major square `x`.
    pub(crate) fn right_mul_adjoint_acc(&self, coef: c64, x: &[c64], out: &mut [c64]) {
        let d = self.dim;
        // column c of x A^dagger = sum_k conj(A[c, k]) * column k of x
        for c in 0..d {
            let (cols, vals) = self.row(c);
            for (&k, &v) in cols.iter().zip(vals) {
                let w = coef * v.conj();
                let src = &x[k * d..(k + 1) * d];
                let dst = &mut out[c * d..(c + 1) * d];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
    }

    /// `out += coef * A * x * A^dagger`, using `scratch` (length `d*d`).
    pub(crate) fn sandwich_acc(&self, coef: c64, x: &[c64], scratch: &mut [c64], out: &mut [c64]) {
        scratch.iter_mut().for_each(|s| *s = ZERO);
        self.right_mul_adjoint_acc(c64::new(1.0, 0.0), x, scratch);
        self.left_mul_acc(coef, scratch, out);
    }
}
