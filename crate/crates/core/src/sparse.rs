//! Compressed-sparse-row complex matrices sized for tensor-product operators.
//!
//! The kernels here (kron, matvec, matmul) dominate propagation cost, so they
//! avoid intermediate allocation where practical and keep rows sorted by
//! column index as an internal invariant.

use ndarray as nd;
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    /// Row pointer, length nrows + 1.
    indptr: Vec<usize>,
    /// Column indices, sorted within each row.
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: Vec::with_capacity(n + 1),
            indices: Vec::with_capacity(n),
            data: Vec::with_capacity(n),
        };
        let mut nnz = 0usize;
        m.indptr.push(0);
        for (i, &v) in entries.iter().enumerate() {
            if v != C64::new(0.0, 0.0) {
                m.indices.push(i);
                m.data.push(v);
                nnz += 1;
            }
            m.indptr.push(nnz);
        }
        m
    }

    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, C64)],
    ) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            assert!(r < nrows, "row index out of range");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; triplets.len()];
        let mut data = vec![C64::new(0.0, 0.0); triplets.len()];
        let mut fill = counts.clone();
        for &(r, c, v) in triplets {
            assert!(c < ncols, "col index out of range");
            let pos = fill[r];
            indices[pos] = c;
            data[pos] = v;
            fill[r] += 1;
        }
        let mut m = CsrMatrix {
            nrows,
            ncols,
            indptr: counts,
            indices,
            data,
        };
        m.sort_and_merge_rows();
        m
    }

    fn sort_and_merge_rows(&mut self) {
        let mut new_indptr = Vec::with_capacity(self.nrows + 1);
        let mut new_indices = Vec::with_capacity(self.indices.len());
        let mut new_data = Vec::with_capacity(self.data.len());
        new_indptr.push(0);
        let mut row_buf: Vec<(usize, C64)> = Vec::new();
        for r in 0..self.nrows {
            row_buf.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                row_buf.push((self.indices[k], self.data[k]));
            }
            row_buf.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row_buf.len() {
                let col = row_buf[i].0;
                let mut acc = row_buf[i].1;
                let mut j = i + 1;
                while j < row_buf.len() && row_buf[j].0 == col {
                    acc += row_buf[j].1;
                    j += 1;
                }
                if acc != C64::new(0.0, 0.0) {
                    new_indices.push(col);
                    new_data.push(acc);
                }
                i = j;
            }
            new_indptr.push(new_indices.len());
        }
        self.indptr = new_indptr;
        self.indices = new_indices;
        self.data = new_data;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn iter_triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1])
                .map(move |k| (r, self.indices[k], self.data[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        for k in self.indptr[row]..self.indptr[row + 1] {
            if self.indices[k] == col {
                return self.data[k];
            }
        }
        C64::new(0.0, 0.0)
    }

    pub fn scale(&self, c: C64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    pub fn scale_inplace(&mut self, c: C64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut data = Vec::with_capacity(self.nnz() + other.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            let (mut i, ie) = (self.indptr[r], self.indptr[r + 1]);
            let (mut j, je) = (other.indptr[r], other.indptr[r + 1]);
            while i < ie || j < je {
                let ci = if i < ie { self.indices[i] } else { usize::MAX };
                let cj = if j < je { other.indices[j] } else { usize::MAX };
                if ci < cj {
                    indices.push(ci);
                    data.push(self.data[i]);
                    i += 1;
                } else if cj < ci {
                    indices.push(cj);
                    data.push(other.data[j]);
                    j += 1;
                } else {
                    let v = self.data[i] + other.data[j];
                    if v != C64::new(0.0, 0.0) {
                        indices.push(ci);
                        data.push(v);
                    }
                    i += 1;
                    j += 1;
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn dagger(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![C64::new(0.0, 0.0); self.nnz()];
        let mut fill = counts.clone();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let pos = fill[c];
                indices[pos] = r;
                data[pos] = self.data[k].conj();
                fill[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            data,
        }
    }

    pub fn kron(&self, other: &CsrMatrix) -> CsrMatrix {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let nnz = self.nnz() * other.nnz();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        indptr.push(0);
        for ra in 0..self.nrows {
            for rb in 0..other.nrows {
                for ka in self.indptr[ra]..self.indptr[ra + 1] {
                    let ca = self.indices[ka];
                    let va = self.data[ka];
                    for kb in other.indptr[rb]..other.indptr[rb + 1] {
                        indices.push(ca * other.ncols + other.indices[kb]);
                        data.push(va * other.data[kb]);
                    }
                }
                indptr.push(indices.len());
            }
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        // Gustavson's algorithm with a dense accumulator per row.
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut row_cols: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            row_cols.clear();
            for ka in self.indptr[r]..self.indptr[r + 1] {
                let a = self.data[ka];
                let m = self.indices[ka];
                for kb in other.indptr[m]..other.indptr[m + 1] {
                    let c = other.indices[kb];
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        row_cols.push(c);
                    }
                    acc[c] += a * other.data[kb];
                }
            }
            row_cols.sort_unstable();
            for &c in &row_cols {
                if acc[c] != C64::new(0.0, 0.0) {
                    indices.push(c);
                    data.push(acc[c]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// y += coeff * (A x)
    pub fn matvec_acc(&self, coeff: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut s = C64::new(0.0, 0.0);
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[r] += coeff * s;
        }
    }

    pub fn matvec(&self, x: &nd::Array1<C64>) -> nd::Array1<C64> {
        let xs = x.as_slice().expect("contiguous state");
        let mut y = nd::Array1::zeros(self.nrows);
        self.matvec_acc(
            C64::new(1.0, 0.0),
            xs,
            y.as_slice_mut().expect("contiguous output"),
        );
        y
    }

    /// Dense product out += coeff * A * B for row-major dense B.
    pub fn mat_dense_acc(&self, coeff: C64, b: &nd::Array2<C64>, out: &mut nd::Array2<C64>) {
        assert_eq!(b.nrows(), self.ncols);
        assert_eq!(out.nrows(), self.nrows);
        assert_eq!(out.ncols(), b.ncols());
        let bs = b.as_slice().expect("contiguous dense operand");
        let w = b.ncols();
        let os = out.as_slice_mut().expect("contiguous dense output");
        for r in 0..self.nrows {
            let orow = &mut os[r * w..(r + 1) * w];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let v = coeff * self.data[k];
                let brow = &bs[self.indices[k] * w..(self.indices[k] + 1) * w];
                for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                    *o += v * bv;
                }
            }
        }
    }

    /// Dense product out += coeff * B * A for row-major dense B.
    pub fn dense_mat_acc(&self, coeff: C64, b: &nd::Array2<C64>, out: &mut nd::Array2<C64>) {
        assert_eq!(b.ncols(), self.nrows);
        assert_eq!(out.nrows(), b.nrows());
        assert_eq!(out.ncols(), self.ncols);
        let bs = b.as_slice().expect("contiguous dense operand");
        let w = self.ncols;
        let os = out.as_slice_mut().expect("contiguous dense output");
        for i in 0..b.nrows() {
            let brow = &bs[i * self.nrows..(i + 1) * self.nrows];
            let orow = &mut os[i * w..(i + 1) * w];
            for r in 0..self.nrows {
                let bv = brow[r];
                if bv == C64::new(0.0, 0.0) {
                    continue;
                }
                let cv = coeff * bv;
                for k in self.indptr[r]..self.indptr[r + 1] {
                    orow[self.indices[k]] += cv * self.data[k];
                }
            }
        }
    }

    pub fn to_dense(&self) -> nd::Array2<C64> {
        let mut m = nd::Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.iter_triplets() {
            m[[r, c]] = v;
        }
        m
    }

    pub fn from_dense(m: &nd::ArrayView2<C64>, drop_tol: f64) -> Self {
        let mut trips = Vec::new();
        for ((r, c), &v) in m.indexed_iter() {
            if v.norm() > drop_tol {
                trips.push((r, c, v));
            }
        }
        CsrMatrix::from_triplets(m.nrows(), m.ncols(), &trips)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |self - self†| entry; 0 for exactly Hermitian matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        let diff = self.add(&self.dagger().scale(C64::new(-1.0, 0.0)));
        diff.max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.nrows == self.ncols && self.hermiticity_deviation() <= tol
    }
}
