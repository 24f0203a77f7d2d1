use std::fmt;

use crate::gf::Field;

/// Storage layout of a [`DenseMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One bit per entry, rows packed into `u64` words. GF(2) only.
    Bits,
    /// One byte per entry holding the canonical encoding.
    Bytes,
}

#[derive(Clone)]
pub(crate) enum Store {
    Bits { words_per_row: usize, words: Vec<u64> },
    Bytes(Vec<u8>),
}

/// Row-major dense matrix over a finite field.
///
/// GF(2) matrices default to the bit-packed layout; every other field uses bytes.
#[derive(Clone)]
pub struct DenseMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    pub(crate) store: Store,
}

impl DenseMatrix {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Self {
        let layout = if field.is_binary() {
            Layout::Bits
        } else {
            Layout::Bytes
        };
        Self::zeros_with_layout(field, rows, cols, layout)
    }

    /// Forces a layout; `Bits` is silently replaced by `Bytes` outside GF(2).
    pub fn zeros_with_layout(field: &Field, rows: usize, cols: usize, layout: Layout) -> Self {
        let store = match layout {
            Layout::Bits if field.is_binary() => {
                let words_per_row = cols.div_ceil(64);
                Store::Bits {
                    words_per_row,
                    words: vec![0; words_per_row * rows],
                }
            }
            _ => Store::Bytes(vec![0; rows * cols]),
        };
        DenseMatrix {
            field: field.clone(),
            rows,
            cols,
            store,
        }
    }

    pub fn identity(field: &Field, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from row vectors of canonical encodings.
    pub fn from_rows(field: &Field, cols: usize, rows: &[Vec<u8>]) -> Self {
        let mut m = Self::zeros(field, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged row {i}");
            for (j, &v) in row.iter().enumerate() {
                assert!((v as u32) < field.order(), "entry {v} outside {field}");
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn layout(&self) -> Layout {
        match self.store {
            Store::Bits { .. } => Layout::Bits,
            Store::Bytes(_) => Layout::Bytes,
        }
    }

    /// Copy of this matrix in the requested layout.
    pub fn to_layout(&self, layout: Layout) -> Self {
        if layout == self.layout() {
            return self.clone();
        }
        let mut out = Self::zeros_with_layout(&self.field, self.rows, self.cols, layout);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if v != 0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        debug_assert!(i < self.rows && j < self.cols);
        match &self.store {
            Store::Bits {
                words_per_row,
                words,
            } => ((words[i * words_per_row + j / 64] >> (j % 64)) & 1) as u8,
            Store::Bytes(b) => b[i * self.cols + j],
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        debug_assert!(i < self.rows && j < self.cols);
        match &mut self.store {
            Store::Bits {
                words_per_row,
                words,
            } => {
                let w = &mut words[i * *words_per_row + j / 64];
                if v & 1 == 1 {
                    *w |= 1 << (j % 64);
                } else {
                    *w &= !(1 << (j % 64));
                }
            }
            Store::Bytes(b) => b[i * self.cols + j] = v,
        }
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_zero_row(&self, i: usize) -> bool {
        match &self.store {
            Store::Bits {
                words_per_row,
                words,
            } => words[i * words_per_row..(i + 1) * words_per_row]
                .iter()
                .all(|&w| w == 0),
            Store::Bytes(b) => b[i * self.cols..(i + 1) * self.cols].iter().all(|&v| v == 0),
        }
    }

    /// Number of nonzero entries in row `i`.
    pub fn row_weight(&self, i: usize) -> usize {
        match &self.store {
            Store::Bits {
                words_per_row,
                words,
            } => words[i * words_per_row..(i + 1) * words_per_row]
                .iter()
                .map(|w| w.count_ones() as usize)
                .sum(),
            Store::Bytes(b) => b[i * self.cols..(i + 1) * self.cols]
                .iter()
                .filter(|&&v| v != 0)
                .count(),
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        match &mut self.store {
            Store::Bits {
                words_per_row,
                words,
            } => {
                let w = *words_per_row;
                for k in 0..w {
                    words.swap(a * w + k, b * w + k);
                }
            }
            Store::Bytes(v) => {
                let c = self.cols;
                for k in 0..c {
                    v.swap(a * c + k, b * c + k);
                }
            }
        }
    }

    /// `row[dst] += coef * row[src]`, touching columns `from..` only.
    pub(crate) fn axpy_row_from(&mut self, dst: usize, src: usize, coef: u8, from: usize) {
        if coef == 0 || dst == src {
            return;
        }
        match &mut self.store {
            Store::Bits {
                words_per_row,
                words,
            } => {
                let w = *words_per_row;
                let (d0, s0) = (dst * w, src * w);
                for k in from / 64..w {
                    let s = words[s0 + k];
                    words[d0 + k] ^= s;
                }
            }
            Store::Bytes(v) => {
                let c = self.cols;
                let f = &self.field;
                for k in from..c {
                    let s = v[src * c + k];
                    if s != 0 {
                        let d = v[dst * c + k];
                        v[dst * c + k] = f.add(d, f.mul(coef, s));
                    }
                }
            }
        }
    }

    pub fn axpy_row(&mut self, dst: usize, src: usize, coef: u8) {
        self.axpy_row_from(dst, src, coef, 0);
    }

    pub fn scale_row(&mut self, i: usize, coef: u8) {
        if coef == 1 {
            return;
        }
        match &mut self.store {
            Store::Bits {
                words_per_row,
                words,
            } => {
                if coef == 0 {
                    let w = *words_per_row;
                    words[i * w..(i + 1) * w].fill(0);
                }
            }
            Store::Bytes(v) => {
                let c = self.cols;
                for x in &mut v[i * c..(i + 1) * c] {
                    *x = self.field.mul(*x, coef);
                }
            }
        }
    }

    /// First column `>= from` with a nonzero entry in row `i`.
    pub(crate) fn first_nonzero_in_row(&self, i: usize, from: usize) -> Option<usize> {
        match &self.store {
            Store::Bits {
                words_per_row,
                words,
            } => {
                let row = &words[i * words_per_row..(i + 1) * words_per_row];
                let mut k = from / 64;
                if k >= row.len() {
                    return None;
                }
                let mut w = row[k] & (!0u64 << (from % 64));
                loop {
                    if w != 0 {
                        let j = k * 64 + w.trailing_zeros() as usize;
                        return (j < self.cols).then_some(j);
                    }
                    k += 1;
                    if k >= row.len() {
                        return None;
                    }
                    w = row[k];
                }
            }
            Store::Bytes(b) => (from..self.cols).find(|&j| b[i * self.cols + j] != 0),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros_with_layout(&self.field, self.cols, self.rows, self.layout());
        for i in 0..self.rows {
            let mut j = 0;
            while let Some(c) = self.first_nonzero_in_row(i, j) {
                out.set(c, i, self.get(i, c));
                j = c + 1;
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        assert_eq!(self.field, other.field, "mixed fields in product");
        let mut out =
            DenseMatrix::zeros_with_layout(&self.field, self.rows, other.cols, other.layout());
        match (&mut out.store, &other.store) {
            (
                Store::Bits {
                    words_per_row: ow,
                    words: owords,
                },
                Store::Bits {
                    words_per_row: bw,
                    words: bwords,
                },
            ) => {
                let (ow, bw) = (*ow, *bw);
                for i in 0..self.rows {
                    let mut k = 0;
                    while let Some(c) = self.first_nonzero_in_row(i, k) {
                        for t in 0..bw {
                            owords[i * ow + t] ^= bwords[c * bw + t];
                        }
                        k = c + 1;
                    }
                }
            }
            _ => {
                let f = &self.field;
                for i in 0..self.rows {
                    for c in 0..self.cols {
                        let a = self.get(i, c);
                        if a == 0 {
                            continue;
                        }
                        for j in 0..other.cols {
                            let b = other.get(c, j);
                            if b != 0 {
                                let cur = out.get(i, j);
                                out.set(i, j, f.add(cur, f.mul(a, b)));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[u8]) -> Vec<u8> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in product");
        let f = &self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u8;
                for (j, &x) in v.iter().enumerate() {
                    if x != 0 {
                        acc = f.add(acc, f.mul(self.get(i, j), x));
                    }
                }
                acc
            })
            .collect()
    }

    /// Submatrix on the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros_with_layout(&self.field, rows.len(), cols.len(), self.layout());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                let v = self.get(i, j);
                if v != 0 {
                    out.set(a, b, v);
                }
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| self.row_weight(i) == 1 && self.get(i, i) == 1)
    }
}

impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.get(i, j) == other.get(i, j)))
    }
}

impl Eq for DenseMatrix {}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} over {:?}", self.rows, self.cols, self.field)?;
        for i in 0..self.rows.min(32) {
            let row: Vec<String> = (0..self.cols.min(48))
                .map(|j| self.get(i, j).to_string())
                .collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}
