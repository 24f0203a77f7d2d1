use super::dense::DenseMatrix;
#[cfg(test)]
use super::dense::Layout;
use super::MatrixError;
use crate::gf::Field;

/// Reduced row echelon form together with its pivot structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrefResult {
    pub rref: DenseMatrix,
    pub pivot_columns: Vec<usize>,
    pub rank: usize,
}

/// In-place Gauss-Jordan elimination choosing pivots among the first `limit` columns.
///
/// Pivot rule: columns left to right, first nonzero row at or below the current pivot
/// row. Row operations are applied across the full width. Returns the pivot columns.
pub(crate) fn eliminate(m: &mut DenseMatrix, limit: usize, reduce_above: bool) -> Vec<usize> {
    let field = m.field().clone();
    let rows = m.n_rows();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..limit.min(m.n_cols()) {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m.get(i, c) != 0) else {
            continue;
        };
        m.swap_rows(r, p);
        let lead = m.get(r, c);
        if lead != 1 {
            m.scale_row(r, field.inv(lead).expect("nonzero pivot"));
        }
        let start = if reduce_above { 0 } else { r + 1 };
        for i in start..rows {
            if i == r {
                continue;
            }
            let v = m.get(i, c);
            if v != 0 {
                m.axpy_row_from(i, r, field.neg(v), c);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rref(m: &DenseMatrix) -> RrefResult {
    let mut work = m.clone();
    let pivot_columns = eliminate(&mut work, m.n_cols(), true);
    RrefResult {
        rank: pivot_columns.len(),
        rref: work,
        pivot_columns,
    }
}

/// Rank by forward elimination only.
pub fn rank(m: &DenseMatrix) -> usize {
    // Eliminating along the shorter side keeps the work matrix small.
    if m.n_rows() > m.n_cols() {
        let mut t = m.transpose();
        let cols = t.n_cols();
        eliminate(&mut t, cols, false).len()
    } else {
        let mut work = m.clone();
        eliminate(&mut work, m.n_cols(), false).len()
    }
}

/// Inverse of a square matrix.
pub fn invert(m: &DenseMatrix) -> Result<DenseMatrix, MatrixError> {
    let n = m.n_rows();
    if m.n_cols() != n {
        return Err(MatrixError::NotSquare {
            rows: n,
            cols: m.n_cols(),
        });
    }
    let mut aug = augment_identity(m);
    let pivots = eliminate(&mut aug, n, true);
    if pivots.len() < n {
        return Err(MatrixError::Singular { rank: pivots.len() });
    }
    let cols: Vec<usize> = (n..2 * n).collect();
    let rows: Vec<usize> = (0..n).collect();
    Ok(aug.select(&rows, &cols))
}

fn augment_identity(m: &DenseMatrix) -> DenseMatrix {
    let (n, c) = (m.n_rows(), m.n_cols());
    let mut aug = DenseMatrix::zeros_with_layout(m.field(), n, c + n, m.layout());
    for i in 0..n {
        let mut j = 0;
        while let Some(col) = m.first_nonzero_in_row(i, j) {
            aug.set(i, col, m.get(i, col));
            j = col + 1;
        }
        aug.set(i, c + i, 1);
    }
    aug
}

/// Is `m` in reduced row echelon form with exactly the given pivots?
pub fn is_rref(m: &DenseMatrix, pivots: &[usize]) -> bool {
    let mut last = None;
    for (i, &p) in pivots.iter().enumerate() {
        if last.is_some_and(|l| p <= l) {
            return false;
        }
        last = Some(p);
        if m.first_nonzero_in_row(i, 0) != Some(p) || m.get(i, p) != 1 {
            return false;
        }
        if (0..m.n_rows()).any(|r| r != i && m.get(r, p) != 0) {
            return false;
        }
    }
    (pivots.len()..m.n_rows()).all(|i| m.is_zero_row(i))
}

/// Outcome of a span-membership query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpanCertificate {
    /// `M * coefficients = v`.
    InSpan { coefficients: Vec<u8> },
    /// A row functional `f` with `f * M = 0` and `f * v != 0`.
    Absent { functional: Vec<u8> },
}

/// Precomputed elimination of a fixed column set, answering membership queries.
#[derive(Debug, Clone)]
pub struct SpanOracle {
    field: Field,
    transform: DenseMatrix,
    pivots: Vec<usize>,
    n_cols: usize,
}

impl SpanOracle {
    pub fn new(m: &DenseMatrix) -> Self {
        let (n, c) = (m.n_rows(), m.n_cols());
        let mut aug = augment_identity(m);
        let pivots = eliminate(&mut aug, c, true);
        let rows: Vec<usize> = (0..n).collect();
        let cols: Vec<usize> = (c..c + n).collect();
        SpanOracle {
            field: m.field().clone(),
            transform: aug.select(&rows, &cols),
            pivots,
            n_cols: c,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn n_rows(&self) -> usize {
        self.transform.n_rows()
    }

    pub fn query(&self, v: &[u8]) -> Result<SpanCertificate, MatrixError> {
        if v.len() != self.n_rows() {
            return Err(MatrixError::DimensionMismatch {
                expected: self.n_rows(),
                found: v.len(),
            });
        }
        let w = self.transform.mul_vec(v);
        let r = self.pivots.len();
        if let Some(i) = (r..w.len()).find(|&i| w[i] != 0) {
            return Ok(SpanCertificate::Absent {
                functional: self.transform.row(i),
            });
        }
        let mut coefficients = vec![0u8; self.n_cols];
        for (i, &p) in self.pivots.iter().enumerate() {
            coefficients[p] = w[i];
        }
        Ok(SpanCertificate::InSpan { coefficients })
    }

    pub fn contains(&self, v: &[u8]) -> Result<bool, MatrixError> {
        Ok(matches!(self.query(v)?, SpanCertificate::InSpan { .. }))
    }

    pub fn field(&self) -> &Field {
        &self.field
    }
}

/// Span membership of `v` in the column space of `m`.
pub fn in_span(m: &DenseMatrix, v: &[u8]) -> Result<SpanCertificate, MatrixError> {
    SpanOracle::new(m).query(v)
}

/// A growing independent set of vectors kept in echelon form for fast membership tests.
///
/// Each stored row has a leading 1 at its pivot and zeros at the pivots of every row
/// stored before it, so a single pass in insertion order reduces a query vector.
#[derive(Debug, Clone)]
pub struct IncrementalBasis {
    rows: DenseMatrix,
    pivots: Vec<usize>,
}

impl IncrementalBasis {
    pub fn new(field: &Field, dim: usize) -> Self {
        IncrementalBasis {
            rows: DenseMatrix::zeros(field, dim + 1, dim),
            pivots: Vec::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn with_layout(field: &Field, dim: usize, layout: Layout) -> Self {
        IncrementalBasis {
            rows: DenseMatrix::zeros_with_layout(field, dim + 1, dim, layout),
            pivots: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.n_cols()
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    fn load_and_reduce(&mut self, entries: &[(usize, u8)]) -> Option<usize> {
        let slot = self.pivots.len();
        let field = self.rows.field().clone();
        self.rows.scale_row(slot, 0);
        for &(i, v) in entries {
            self.rows.set(slot, i, v);
        }
        for (b, &p) in self.pivots.iter().enumerate() {
            let v = self.rows.get(slot, p);
            if v != 0 {
                self.rows.axpy_row(slot, b, field.neg(v));
            }
        }
        self.rows.first_nonzero_in_row(slot, 0)
    }

    /// Is the sparse vector in the span of the stored vectors?
    pub fn contains(&mut self, entries: &[(usize, u8)]) -> bool {
        self.load_and_reduce(entries).is_none()
    }

    /// Adds the vector if it is independent of the stored ones; returns whether it was added.
    pub fn insert(&mut self, entries: &[(usize, u8)]) -> bool {
        if self.pivots.len() == self.dim() {
            return false;
        }
        let Some(p) = self.load_and_reduce(entries) else {
            return false;
        };
        let slot = self.pivots.len();
        let lead = self.rows.get(slot, p);
        let inv = self.rows.field().inv(lead).expect("nonzero lead");
        self.rows.scale_row(slot, inv);
        self.pivots.push(p);
        true
    }
}
