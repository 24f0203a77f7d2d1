use std::collections::{HashMap, HashSet};

use super::dense::DenseMatrix;
use super::elim;
use super::MatrixError;
use crate::gf::Field;

/// A sparse column: strictly increasing row indices paired with nonzero encodings.
pub type SparseColumn = Vec<(usize, u8)>;

/// Column-major sparse matrix with stable column labels and row identities.
///
/// `row_ids[i]` is the row index that row `i` had in the matrix this one was derived
/// from by contraction, so derived matrices can still refer to original rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    field: Field,
    n_rows: usize,
    columns: Vec<SparseColumn>,
    labels: Vec<usize>,
    row_ids: Vec<usize>,
}

impl SparseMatrix {
    pub fn new(field: &Field, n_rows: usize) -> Self {
        SparseMatrix {
            field: field.clone(),
            n_rows,
            columns: Vec::new(),
            labels: Vec::new(),
            row_ids: (0..n_rows).collect(),
        }
    }

    /// Builds a matrix with labels `0..columns.len()`.
    pub fn from_columns(
        field: &Field,
        n_rows: usize,
        columns: Vec<SparseColumn>,
    ) -> Result<Self, MatrixError> {
        let mut m = SparseMatrix::new(field, n_rows);
        for (j, c) in columns.into_iter().enumerate() {
            m.push_column(j, c)?;
        }
        Ok(m)
    }

    /// Builds from dense column vectors, labels `0..`.
    pub fn from_dense_columns(field: &Field, n_rows: usize, columns: &[Vec<u8>]) -> Self {
        let cols = columns
            .iter()
            .map(|c| {
                assert_eq!(c.len(), n_rows, "column length mismatch");
                c.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(i, &v)| (i, v))
                    .collect()
            })
            .collect();
        SparseMatrix::from_columns(field, n_rows, cols).expect("dense columns are valid")
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let cols: Vec<Vec<u8>> = (0..m.n_cols()).map(|j| m.column(j)).collect();
        SparseMatrix::from_dense_columns(m.field(), m.n_rows(), &cols)
    }

    pub fn push_column(&mut self, label: usize, column: SparseColumn) -> Result<(), MatrixError> {
        let q = self.field.order();
        for (t, &(i, v)) in column.iter().enumerate() {
            if i >= self.n_rows {
                return Err(MatrixError::RowOutOfRange {
                    row: i,
                    n_rows: self.n_rows,
                });
            }
            if v == 0 || v as u32 >= q {
                return Err(MatrixError::BadEntry { value: v as u32, q });
            }
            if t > 0 && column[t - 1].0 >= i {
                return Err(MatrixError::UnsortedColumn { label });
            }
        }
        if self.labels.contains(&label) {
            return Err(MatrixError::DuplicateLabel(label));
        }
        self.columns.push(column);
        self.labels.push(label);
        Ok(())
    }

    /// Appends without validation; callers guarantee the invariants.
    pub(crate) fn push_unchecked(&mut self, label: usize, column: SparseColumn) {
        debug_assert!(column.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(column.iter().all(|&(i, v)| v != 0 && i < self.n_rows));
        self.columns.push(column);
        self.labels.push(label);
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &SparseColumn {
        &self.columns[j]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> usize {
        self.labels[j]
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn set_row_ids(&mut self, ids: Vec<usize>) {
        assert_eq!(ids.len(), self.n_rows, "row id count");
        self.row_ids = ids;
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    fn label_index(&self) -> HashMap<usize, usize> {
        self.labels.iter().enumerate().map(|(j, &l)| (l, j)).collect()
    }

    pub fn index_of(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Positions of the given labels, failing on the first unknown one.
    pub fn indices_of(&self, labels: &[usize]) -> Result<Vec<usize>, MatrixError> {
        let idx = self.label_index();
        labels
            .iter()
            .map(|l| idx.get(l).copied().ok_or(MatrixError::UnknownLabel(*l)))
            .collect()
    }

    pub fn dense_column(&self, j: usize) -> Vec<u8> {
        let mut v = vec![0u8; self.n_rows];
        for &(i, x) in &self.columns[j] {
            v[i] = x;
        }
        v
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(&self.field, self.n_rows, self.n_cols());
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Columns at the given positions, in that order, labels kept.
    pub fn select_columns(&self, positions: &[usize]) -> SparseMatrix {
        let mut out = SparseMatrix {
            field: self.field.clone(),
            n_rows: self.n_rows,
            columns: Vec::with_capacity(positions.len()),
            labels: Vec::with_capacity(positions.len()),
            row_ids: self.row_ids.clone(),
        };
        for &j in positions {
            out.push_unchecked(self.labels[j], self.columns[j].clone());
        }
        out
    }

    pub fn select_labels(&self, labels: &[usize]) -> Result<SparseMatrix, MatrixError> {
        Ok(self.select_columns(&self.indices_of(labels)?))
    }

    /// Keeps the listed rows (in the given order) and reindexes columns onto them.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.n_rows];
        for (new, &old) in rows.iter().enumerate() {
            map[old] = new;
        }
        let mut out = SparseMatrix::new(&self.field, rows.len());
        out.row_ids = rows.iter().map(|&r| self.row_ids[r]).collect();
        for (j, col) in self.columns.iter().enumerate() {
            let mut c: SparseColumn = col
                .iter()
                .filter(|(i, _)| map[*i] != usize::MAX)
                .map(|&(i, v)| (map[i], v))
                .collect();
            c.sort_unstable_by_key(|e| e.0);
            out.push_unchecked(self.labels[j], c);
        }
        out
    }

    /// Rank over the matrix's field.
    ///
    /// Columns removed by 2-core peeling are coloops, so the rank is their number plus
    /// the rank of the densified core.
    pub fn rank(&self) -> usize {
        let pr = crate::peel::two_core(self);
        let peeled = self.n_cols() - pr.core.n_cols();
        if pr.core.n_cols() == 0 {
            return peeled;
        }
        peeled + elim::rank(&pr.core.to_dense())
    }

    /// Rank without the peeling shortcut.
    pub fn rank_direct(&self) -> usize {
        elim::rank(&self.to_dense())
    }

    /// Rank of the columns at the given positions.
    pub fn rank_of(&self, positions: &[usize]) -> usize {
        self.select_columns(positions).rank()
    }

    /// Matrix after appending the columns of `other` (same field and rows).
    pub fn append(&mut self, other: &SparseMatrix) -> Result<(), MatrixError> {
        if other.n_rows != self.n_rows {
            return Err(MatrixError::DimensionMismatch {
                expected: self.n_rows,
                found: other.n_rows,
            });
        }
        for (j, c) in other.columns.iter().enumerate() {
            self.push_column(other.labels[j], c.clone())?;
        }
        Ok(())
    }
}

/// Removes the columns labelled `x`.
pub fn delete_rep(a: &SparseMatrix, x: &[usize]) -> Result<SparseMatrix, MatrixError> {
    let drop: HashSet<usize> = a.indices_of(x)?.into_iter().collect();
    let keep: Vec<usize> = (0..a.n_cols()).filter(|j| !drop.contains(j)).collect();
    Ok(a.select_columns(&keep))
}

/// Representation of the contraction by the columns labelled `x`.
///
/// The columns of `x` are pivoted in the order given (first nonzero row top-down not
/// already used, no physical swaps); afterwards the pivot rows and the `x` columns are
/// dropped. Surviving rows keep their identities.
pub fn contract_rep(a: &SparseMatrix, x: &[usize]) -> Result<SparseMatrix, MatrixError> {
    let xs = a.indices_of(x)?;
    if xs.is_empty() {
        return Ok(a.clone());
    }
    let field = a.field().clone();
    let mut d = a.to_dense();
    let n = a.n_rows();
    let mut used = vec![false; n];
    for &c in &xs {
        let Some(p) = (0..n).find(|&i| !used[i] && d.get(i, c) != 0) else {
            continue;
        };
        used[p] = true;
        let lead = d.get(p, c);
        if lead != 1 {
            d.scale_row(p, field.inv(lead).expect("nonzero pivot"));
        }
        for i in 0..n {
            if i != p {
                let v = d.get(i, c);
                if v != 0 {
                    d.axpy_row(i, p, field.neg(v));
                }
            }
        }
    }
    let in_x: HashSet<usize> = xs.into_iter().collect();
    let rows: Vec<usize> = (0..n).filter(|&i| !used[i]).collect();
    let mut out = SparseMatrix::new(&field, rows.len());
    out.row_ids = rows.iter().map(|&r| a.row_ids[r]).collect();
    for j in 0..a.n_cols() {
        if in_x.contains(&j) {
            continue;
        }
        let col: SparseColumn = rows
            .iter()
            .enumerate()
            .filter_map(|(new, &i)| {
                let v = d.get(i, j);
                (v != 0).then_some((new, v))
            })
            .collect();
        out.push_unchecked(a.labels[j], col);
    }
    Ok(out)
}

/// Scales a nonzero column so its first entry is 1; `None` for the zero column.
pub fn normalize_column(field: &Field, col: &[(usize, u8)]) -> Option<SparseColumn> {
    let &(_, lead) = col.first()?;
    let inv = field.inv(lead).expect("nonzero lead");
    Some(col.iter().map(|&(i, v)| (i, field.mul(v, inv))).collect())
}

/// Drops zero columns and keeps the lowest-labelled column of each parallel class.
pub fn simplify(a: &SparseMatrix) -> SparseMatrix {
    let mut best: HashMap<SparseColumn, usize> = HashMap::new();
    for j in 0..a.n_cols() {
        let Some(key) = normalize_column(a.field(), a.column(j)) else {
            continue;
        };
        best.entry(key)
            .and_modify(|b| {
                if a.label(j) < a.label(*b) {
                    *b = j;
                }
            })
            .or_insert(j);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    a.select_columns(&keep)
}

/// Whether two columns are nonzero scalar multiples of each other.
pub fn parallel(field: &Field, a: &[(usize, u8)], b: &[(usize, u8)]) -> bool {
    match (normalize_column(field, a), normalize_column(field, b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}
