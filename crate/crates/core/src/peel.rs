//! The 2-core of a matrix and its hypergraph.
//!
//! Peeling repeatedly removes zero rows, and rows with a single nonzero together with
//! the column holding it. The fixed point does not depend on the removal order.

use std::collections::VecDeque;

use thiserror::Error;

use crate::spmat::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeelError {
    #[error("the 2-core is empty")]
    EmptyCore,
}

/// One peeling step: the removed row and, if it had a nonzero, the removed column label.
pub type PeelStep = (usize, Option<usize>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelResult {
    pub core: SparseMatrix,
    /// Row positions of the input matrix that survive, ascending.
    pub kept_rows: Vec<usize>,
    /// Labels of surviving columns, in input order.
    pub kept_cols: Vec<usize>,
    pub peel_trace: Vec<PeelStep>,
}

impl PeelResult {
    pub fn is_empty(&self) -> bool {
        self.core.n_cols() == 0
    }
}

/// Row-to-column incidence in CSR form.
struct RowIndex {
    start: Vec<usize>,
    cols: Vec<usize>,
}

impl RowIndex {
    fn new(a: &SparseMatrix) -> Self {
        let mut start = vec![0usize; a.n_rows() + 1];
        for col in a.columns() {
            for &(i, _) in col {
                start[i + 1] += 1;
            }
        }
        for i in 0..a.n_rows() {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut cols = vec![0usize; a.nnz()];
        for (j, col) in a.columns().iter().enumerate() {
            for &(i, _) in col {
                cols[fill[i]] = j;
                fill[i] += 1;
            }
        }
        RowIndex { start, cols }
    }

    fn row(&self, i: usize) -> &[usize] {
        &self.cols[self.start[i]..self.start[i + 1]]
    }
}

/// The 2-core of `a`, peeled in FIFO order over row degrees.
pub fn two_core(a: &SparseMatrix) -> PeelResult {
    let n = a.n_rows();
    let idx = RowIndex::new(a);
    let mut deg: Vec<usize> = (0..n).map(|i| idx.row(i).len()).collect();
    let mut row_alive = vec![true; n];
    let mut col_alive = vec![true; a.n_cols()];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| deg[i] <= 1).collect();
    let mut queued: Vec<bool> = deg.iter().map(|&d| d <= 1).collect();
    let mut trace = Vec::new();
    while let Some(i) = queue.pop_front() {
        if !row_alive[i] {
            continue;
        }
        row_alive[i] = false;
        if deg[i] == 0 {
            trace.push((i, None));
            continue;
        }
        let c = *idx
            .row(i)
            .iter()
            .find(|&&c| col_alive[c])
            .expect("degree-one row has a live column");
        col_alive[c] = false;
        for &(r, _) in a.column(c) {
            deg[r] -= 1;
            if row_alive[r] && deg[r] <= 1 && !queued[r] {
                queued[r] = true;
                queue.push_back(r);
            }
        }
        trace.push((i, Some(a.label(c))));
    }
    finish(a, &row_alive, &col_alive, trace)
}

fn finish(
    a: &SparseMatrix,
    row_alive: &[bool],
    col_alive: &[bool],
    peel_trace: Vec<PeelStep>,
) -> PeelResult {
    let kept_rows: Vec<usize> = (0..a.n_rows()).filter(|&i| row_alive[i]).collect();
    let keep_cols: Vec<usize> = (0..a.n_cols()).filter(|&j| col_alive[j]).collect();
    let core = a.select_columns(&keep_cols).select_rows(&kept_rows);
    PeelResult {
        core,
        kept_rows,
        kept_cols: keep_cols.iter().map(|&j| a.label(j)).collect(),
        peel_trace,
    }
}

/// Replays a trace against `a`, checking every step is a legal removal.
///
/// Returns the resulting core, or `None` if a step is illegal or the end state still
/// has a removable row.
pub fn replay_trace(a: &SparseMatrix, trace: &[PeelStep]) -> Option<PeelResult> {
    let idx = RowIndex::new(a);
    let mut row_alive = vec![true; a.n_rows()];
    let mut col_alive = vec![true; a.n_cols()];
    for &(i, c) in trace {
        if i >= a.n_rows() || !row_alive[i] {
            return None;
        }
        let live: Vec<usize> = idx.row(i).iter().copied().filter(|&j| col_alive[j]).collect();
        match (c, live.as_slice()) {
            (None, []) => {}
            (Some(label), [j]) if a.label(*j) == label => col_alive[*j] = false,
            _ => return None,
        }
        row_alive[i] = false;
    }
    let stuck = (0..a.n_rows()).all(|i| {
        !row_alive[i] || idx.row(i).iter().filter(|&&j| col_alive[j]).count() >= 2
    });
    stuck.then(|| finish(a, &row_alive, &col_alive, trace.to_vec()))
}

/// Hypergraph of a core: vertices are core columns, one edge per core row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub n_vertices: usize,
    /// Vertex positions of each edge, ascending.
    pub edges: Vec<Vec<usize>>,
    /// Field values on each edge, aligned with `edges`.
    pub values: Vec<Vec<u8>>,
    /// Red marks the 2-edges.
    pub red: Vec<bool>,
}

impl Hypergraph {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn red_count(&self) -> usize {
        self.red.iter().filter(|&&r| r).count()
    }

    pub fn edge_size_histogram(&self) -> Vec<usize> {
        let max = self.edges.iter().map(Vec::len).max().unwrap_or(0);
        let mut h = vec![0; max + 1];
        for e in &self.edges {
            h[e.len()] += 1;
        }
        h
    }

    pub fn vertex_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for e in &self.edges {
            for &v in e {
                d[v] += 1;
            }
        }
        d
    }
}

pub fn hypergraph_of(pr: &PeelResult) -> Result<Hypergraph, PeelError> {
    hypergraph_of_matrix(&pr.core)
}

/// Hypergraph whose edges are the row supports of `m`; `m` must have columns.
pub fn hypergraph_of_matrix(m: &SparseMatrix) -> Result<Hypergraph, PeelError> {
    if m.n_cols() == 0 {
        return Err(PeelError::EmptyCore);
    }
    let mut edges = vec![Vec::new(); m.n_rows()];
    let mut values = vec![Vec::new(); m.n_rows()];
    for (j, col) in m.columns().iter().enumerate() {
        for &(i, v) in col {
            edges[i].push(j);
            values[i].push(v);
        }
    }
    let red = edges.iter().map(|e| e.len() == 2).collect();
    Ok(Hypergraph {
        n_vertices: m.n_cols(),
        edges,
        values,
        red,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2() -> Field {
        Field::binary()
    }

    fn cols(n: usize, supports: &[&[usize]]) -> SparseMatrix {
        let c = supports
            .iter()
            .map(|s| s.iter().map(|&i| (i, 1u8)).collect())
            .collect();
        SparseMatrix::from_columns(&f2(), n, c).unwrap()
    }

    #[test]
    fn identity_peels_away() {
        let a = cols(4, &[&[0], &[1], &[2], &[3]]);
        let pr = two_core(&a);
        assert!(pr.is_empty());
        assert!(pr.kept_rows.is_empty());
        assert!(matches!(hypergraph_of(&pr), Err(PeelError::EmptyCore)));
    }

    #[test]
    fn doubled_column_is_its_own_core() {
        let a = cols(6, &[&[0, 1, 2], &[0, 1, 2]]);
        let pr = two_core(&a);
        assert_eq!(pr.kept_rows, vec![0, 1, 2]);
        assert_eq!(pr.kept_cols, vec![0, 1]);
        assert_eq!(pr.core.row_ids(), &[0, 1, 2]);
    }

    #[test]
    fn cascade_example() {
        let a = cols(5, &[&[0, 1, 2], &[2, 3, 4]]);
        let pr = two_core(&a);
        assert!(pr.is_empty());
        assert_eq!(pr.peel_trace.len(), 5);
        assert_eq!(pr.peel_trace[0], (0, Some(0)));
        assert!(replay_trace(&a, &pr.peel_trace).is_some());
    }

    #[test]
    fn hypergraph_examples() {
        let a = cols(1, &[&[0], &[0]]);
        let h = hypergraph_of_matrix(&a).unwrap();
        assert_eq!(h.edges, vec![vec![0, 1]]);
        assert_eq!(h.red, vec![true]);
        let b = cols(3, &[&[0, 1], &[1, 2], &[0, 1, 2]]);
        let h = hypergraph_of_matrix(&b).unwrap();
        assert_eq!(h.edges.iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 3, 2]);
        assert_eq!(h.red, vec![true, false, true]);
        assert_eq!(h.red_count(), 2);
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> SparseMatrix {
        let mut a = SparseMatrix::new(&f2(), n);
        for j in 0..m {
            let mut rows: Vec<usize> = rand::seq::index::sample(rng, n, k).into_vec();
            rows.sort_unstable();
            a.push_column(j, rows.into_iter().map(|i| (i, 1)).collect()).unwrap();
        }
        a
    }

    // Repeated full scans in a random order, sharing nothing with the queue peeler.
    fn naive_core(a: &SparseMatrix, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
        let mut rows: Vec<bool> = vec![true; a.n_rows()];
        let mut colsv: Vec<bool> = vec![true; a.n_cols()];
        loop {
            let mut order: Vec<usize> = (0..a.n_rows()).collect();
            order.shuffle(rng);
            let mut changed = false;
            for i in order {
                if !rows[i] {
                    continue;
                }
                let live: Vec<usize> = (0..a.n_cols())
                    .filter(|&j| colsv[j] && a.column(j).iter().any(|&(r, _)| r == i))
                    .collect();
                if live.len() <= 1 {
                    rows[i] = false;
                    if let Some(&j) = live.first() {
                        colsv[j] = false;
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (
            (0..a.n_rows()).filter(|&i| rows[i]).collect(),
            (0..a.n_cols()).filter(|&j| colsv[j]).map(|j| a.label(j)).collect(),
        )
    }

    #[test]
    fn confluence_against_random_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let n = rng.random_range(3..40);
            let m = rng.random_range(0..40);
            let k = rng.random_range(2..=3.min(n));
            let a = random_matrix(&mut rng, n, m, k);
            let pr = two_core(&a);
            let (rows, cols) = naive_core(&a, &mut rng);
            assert_eq!(pr.kept_rows, rows);
            assert_eq!(pr.kept_cols, cols);
            let replay = replay_trace(&a, &pr.peel_trace).expect("trace replays");
            assert_eq!(replay, pr);
        }
    }

    #[test]
    fn core_invariants_and_idempotence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let a = random_matrix(&mut rng, 60, 55, 3);
            let pr = two_core(&a);
            assert!(pr.core.check_uniform_weight(3).is_ok());
            let h = pr.core.n_cols();
            if h > 0 {
                let hg = hypergraph_of(&pr).unwrap();
                assert!(hg.edges.iter().all(|e| e.len() >= 2));
            }
            let again = two_core(&pr.core);
            assert_eq!(again.core.n_cols(), pr.core.n_cols());
            assert_eq!(again.kept_rows.len(), pr.core.n_rows());
            assert!(again.peel_trace.is_empty());
            assert_eq!(a.rank(), a.rank_direct());
        }
    }
}
