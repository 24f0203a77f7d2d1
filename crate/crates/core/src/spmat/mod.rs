//! Matrices over finite fields: dense and sparse storage, elimination, span queries,
//! and the representation-level deletion and contraction of matroid columns.
//!
//! Elimination always densifies. Process matrices are first reduced to their 2-core
//! (see [`SparseMatrix::rank`]), which leaves a small enough dense problem.

mod dense;
mod elim;
mod format;
mod sparse;

use thiserror::Error;

use crate::gf::GfError;

pub use dense::{DenseMatrix, Layout};
pub use elim::{
    in_span, invert, is_rref, rank, rref, IncrementalBasis, RrefResult, SpanCertificate,
    SpanOracle,
};
pub use format::{parse_matrix, write_matrix, MAX_ROWS};
pub use sparse::{
    contract_rep, delete_rep, normalize_column, parallel, simplify, SparseColumn, SparseMatrix,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix is singular (rank {rank})")]
    Singular { rank: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown column label {0}")]
    UnknownLabel(usize),
    #[error("duplicate column label {0}")]
    DuplicateLabel(usize),
    #[error("row {row} out of range for {n_rows} rows")]
    RowOutOfRange { row: usize, n_rows: usize },
    #[error("entry {value} is not a nonzero element of GF({q})")]
    BadEntry { value: u32, q: u32 },
    #[error("column {label} has unsorted or repeated row indices")]
    UnsortedColumn { label: usize },
    #[error("column {label} has {weight} nonzeros, expected {k}")]
    WrongWeight { label: usize, weight: usize, k: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("declared row count {rows} exceeds the supported maximum")]
    TooLarge { rows: u64 },
    #[error(transparent)]
    Field(#[from] GfError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf(q: u32) -> Field {
        Field::with_order(q).unwrap()
    }

    fn random_dense(f: &Field, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let data: Vec<Vec<u8>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| rng.random_range(0..f.order()) as u8)
                    .collect()
            })
            .collect();
        DenseMatrix::from_rows(f, cols, &data)
    }

    // Laplace expansion, independent of the elimination code under test.
    fn det(f: &Field, m: &[Vec<u8>]) -> u8 {
        let n = m.len();
        if n == 0 {
            return 1;
        }
        let mut acc = 0u8;
        for j in 0..n {
            if m[0][j] == 0 {
                continue;
            }
            let minor: Vec<Vec<u8>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let mut term = f.mul(m[0][j], det(f, &minor));
            if j % 2 == 1 {
                term = f.neg(term);
            }
            acc = f.add(acc, term);
        }
        acc
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = subsets(n - 1, k);
        for mut s in subsets(n - 1, k - 1) {
            s.push(n - 1);
            out.push(s);
        }
        out
    }

    fn minor_rank_oracle(f: &Field, m: &DenseMatrix) -> usize {
        let rows = m.to_rows();
        for size in (1..=m.n_rows().min(m.n_cols())).rev() {
            for rs in subsets(m.n_rows(), size) {
                for cs in subsets(m.n_cols(), size) {
                    let sub: Vec<Vec<u8>> = rs
                        .iter()
                        .map(|&i| cs.iter().map(|&j| rows[i][j]).collect())
                        .collect();
                    if det(f, &sub) != 0 {
                        return size;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn rank_examples() {
        let f2 = gf(2);
        assert_eq!(rank(&DenseMatrix::identity(&f2, 5)), 5);
        let two = SparseMatrix::from_dense_columns(&f2, 3, &[vec![1, 1, 0], vec![1, 1, 0]]);
        assert_eq!(two.rank(), 1);
        let f3 = gf(3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_dense(&f3, 6, 6, &mut rng);
            assert_eq!(rank(&m), minor_rank_oracle(&f3, &m));
        }
    }

    #[test]
    fn rref_examples() {
        let f2 = gf(2);
        let id = DenseMatrix::identity(&f2, 4);
        let r = rref(&id);
        assert_eq!(r.rref, id);
        assert_eq!(r.pivot_columns, vec![0, 1, 2, 3]);
        let z = DenseMatrix::zeros(&f2, 3, 4);
        let r = rref(&z);
        assert_eq!((r.rank, r.rref.clone()), (0, z));
        let m = DenseMatrix::from_rows(&f2, 2, &[vec![1, 1], vec![1, 0]]);
        assert_eq!(rref(&m).rref, DenseMatrix::identity(&f2, 2));
    }

    #[test]
    fn rref_predicate_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in [2, 3, 4, 5, 8, 9] {
            let f = gf(q);
            for _ in 0..30 {
                let rows = rng.random_range(1..9);
                let cols = rng.random_range(1..9);
                let m = random_dense(&f, rows, cols, &mut rng);
                let r = rref(&m);
                assert_eq!(r.rank, r.pivot_columns.len());
                assert!(is_rref(&r.rref, &r.pivot_columns), "{m:?}");
                assert_eq!(rank(&r.rref), r.rank);
                assert_eq!(rank(&m), r.rank);
            }
        }
    }

    #[test]
    fn invert_examples() {
        let f2 = gf(2);
        let id = DenseMatrix::identity(&f2, 3);
        assert_eq!(invert(&id).unwrap(), id);
        let m = DenseMatrix::from_rows(&f2, 2, &[vec![1, 1], vec![0, 1]]);
        let b = invert(&m).unwrap();
        assert_eq!(b, m);
        assert!(m.mul(&b).is_identity() && b.mul(&m).is_identity());
        let s = DenseMatrix::from_rows(&f2, 2, &[vec![1, 1], vec![1, 1]]);
        assert_eq!(invert(&s), Err(MatrixError::Singular { rank: 1 }));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for q in [3, 4, 7] {
            let f = gf(q);
            let mut done = 0;
            while done < 10 {
                let m = random_dense(&f, 5, 5, &mut rng);
                if let Ok(b) = invert(&m) {
                    assert!(m.mul(&b).is_identity() && b.mul(&m).is_identity());
                    done += 1;
                } else {
                    assert!(rank(&m) < 5);
                }
            }
        }
    }

    #[test]
    fn span_examples() {
        let f2 = gf(2);
        let m = DenseMatrix::from_rows(&f2, 2, &[vec![1, 0], vec![1, 1], vec![0, 1]]);
        match in_span(&m, &m.column(0)).unwrap() {
            SpanCertificate::InSpan { coefficients } => {
                assert_eq!(m.mul_vec(&coefficients), m.column(0))
            }
            other => panic!("expected in span, got {other:?}"),
        }
        let e1 = DenseMatrix::from_rows(&f2, 1, &[vec![1], vec![0]]);
        match in_span(&e1, &[0, 1]).unwrap() {
            SpanCertificate::Absent { functional } => {
                assert_eq!(functional, vec![0, 1]);
            }
            other => panic!("expected absence, got {other:?}"),
        }
        assert!(matches!(
            in_span(&e1, &[1]),
            Err(MatrixError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn span_certificates_over_gf4() {
        let f = gf(4);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = random_dense(&f, 6, 3, &mut rng);
            let c: Vec<u8> = (0..3).map(|_| rng.random_range(0..4) as u8).collect();
            let v = m.mul_vec(&c);
            match in_span(&m, &v).unwrap() {
                SpanCertificate::InSpan { coefficients } => {
                    assert_eq!(m.mul_vec(&coefficients), v)
                }
                _ => panic!("consistent system reported absent"),
            }
            let w: Vec<u8> = (0..6).map(|_| rng.random_range(0..4) as u8).collect();
            check_certificate(&m, &w);
        }
    }

    fn check_certificate(m: &DenseMatrix, v: &[u8]) {
        let f = m.field();
        let dot = |a: &[u8], b: &[u8]| {
            a.iter()
                .zip(b)
                .fold(0u8, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
        };
        match in_span(m, v).unwrap() {
            SpanCertificate::InSpan { coefficients } => assert_eq!(m.mul_vec(&coefficients), v),
            SpanCertificate::Absent { functional } => {
                for j in 0..m.n_cols() {
                    assert_eq!(dot(&functional, &m.column(j)), 0);
                }
                assert_ne!(dot(&functional, v), 0);
            }
        }
    }

    #[test]
    fn incremental_basis_matches_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for q in [2, 3, 4] {
            let f = gf(q);
            for layout in [Layout::Bits, Layout::Bytes] {
                let mut basis = IncrementalBasis::with_layout(&f, 12, layout);
                let mut cols: Vec<Vec<u8>> = Vec::new();
                for _ in 0..30 {
                    let v: Vec<u8> = (0..12)
                        .map(|_| {
                            if rng.random_bool(0.25) {
                                rng.random_range(1..q) as u8
                            } else {
                                0
                            }
                        })
                        .collect();
                    let entries: Vec<(usize, u8)> = v
                        .iter()
                        .enumerate()
                        .filter(|(_, &x)| x != 0)
                        .map(|(i, &x)| (i, x))
                        .collect();
                    let before = cols.len();
                    let mut trial = cols.clone();
                    trial.push(v.clone());
                    let independent =
                        SparseMatrix::from_dense_columns(&f, 12, &trial).rank_direct() > before;
                    assert_eq!(basis.contains(&entries), !independent);
                    assert_eq!(basis.insert(&entries), independent);
                    if independent {
                        cols.push(v);
                    }
                    assert_eq!(basis.len(), cols.len());
                }
            }
        }
    }

    #[test]
    fn delete_examples() {
        let f2 = gf(2);
        let a = SparseMatrix::from_dense_columns(
            &f2,
            3,
            &[vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 0]],
        );
        assert_eq!(delete_rep(&a, &[]).unwrap(), a);
        let all = delete_rep(&a, &[0, 1, 2]).unwrap();
        assert_eq!((all.n_rows(), all.n_cols()), (3, 0));
        let d = delete_rep(&a, &[2]).unwrap();
        assert_eq!(d.rank(), a.rank());
        assert_eq!(d.labels(), &[0, 1]);
        assert_eq!(delete_rep(&a, &[9]), Err(MatrixError::UnknownLabel(9)));
    }

    #[test]
    fn contract_examples() {
        let f2 = gf(2);
        let a = SparseMatrix::from_dense_columns(
            &f2,
            3,
            &[vec![1, 0, 0], vec![0, 1, 0], vec![1, 1, 1]],
        );
        let c = contract_rep(&a, &[0]).unwrap();
        assert_eq!(c.n_rows(), 2);
        assert_eq!(c.row_ids(), &[1, 2]);
        assert_eq!(c.labels(), &[1, 2]);
        assert_eq!(c.dense_column(0), vec![1, 0]);
        assert_eq!(c.dense_column(1), vec![1, 1]);
        assert_eq!(contract_rep(&a, &[]).unwrap(), a);
        let basis = contract_rep(&a, &[0, 1, 2]).unwrap();
        assert_eq!((basis.n_rows(), basis.n_cols()), (0, 0));
        let two = contract_rep(&a, &[0, 1]).unwrap();
        assert_eq!(two.n_rows(), 1);
        assert_eq!(two.column(0), &vec![(0, 1)]);
        assert_eq!(contract_rep(&a, &[5]), Err(MatrixError::UnknownLabel(5)));
    }

    #[test]
    fn simplify_examples() {
        let f5 = gf(5);
        let a = SparseMatrix::from_dense_columns(&f5, 2, &[vec![1, 3], vec![2, 1]]);
        assert_eq!(simplify(&a).labels(), &[0]);
        let b = SparseMatrix::from_dense_columns(&f5, 2, &[vec![1, 0], vec![0, 1]]);
        assert_eq!(simplify(&b), b);
        let z = SparseMatrix::from_dense_columns(&f5, 2, &[vec![0, 0], vec![4, 0], vec![1, 0]]);
        assert_eq!(simplify(&z).labels(), &[1]);
    }

    #[test]
    fn bits_and_bytes_agree() {
        let f2 = gf(2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let rows = rng.random_range(1..20);
            let cols = rng.random_range(1..150);
            let bits = random_dense(&f2, rows, cols, &mut rng);
            let bytes = bits.to_layout(Layout::Bytes);
            assert_eq!(bits.layout(), Layout::Bits);
            let (rb, ry) = (rref(&bits), rref(&bytes));
            assert_eq!(rb.pivot_columns, ry.pivot_columns);
            assert_eq!(rb.rref, ry.rref);
            assert_eq!(rank(&bits), rank(&bytes));
        }
    }

    #[test]
    fn matrix_format_round_trip() {
        let f4 = gf(4);
        let a = SparseMatrix::from_dense_columns(
            &f4,
            3,
            &[vec![1, 0, 3], vec![0, 0, 0], vec![2, 2, 2]],
        );
        let text = write_matrix(&a);
        assert_eq!(
            text,
            "matroidphase-mat v1 q=4 p=2 e=2 rows=3 cols=3\n1:1 3:3\n\n1:2 2:2 3:2\n"
        );
        assert_eq!(parse_matrix(&text).unwrap(), a);
        let empty = SparseMatrix::new(&f4, 2);
        assert_eq!(parse_matrix(&write_matrix(&empty)).unwrap(), empty);
    }

    #[test]
    fn matrix_format_rejects_malformed_input() {
        let bad = [
            "",
            "matroidphase-mat v2 q=2 p=2 e=1 rows=1 cols=0\n",
            "matroidphase-mat v1 q=4 p=2 e=1 rows=1 cols=0\n",
            "matroidphase-mat v1 q=4 p=4 e=1 rows=1 cols=0\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=1\n3:1\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=1\n1:2\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=1\n2:1 1:1\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=1\n1:1 1:1\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=2\n1:1\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=0\n\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=2 cols=1\n1:+1\n",
            "matroidphase-mat v1 q=2 p=2 e=1 rows=99999999999 cols=0\n",
        ];
        for text in bad {
            assert!(parse_matrix(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn uniform_weight_check() {
        let f2 = gf(2);
        let a = SparseMatrix::from_dense_columns(&f2, 3, &[vec![1, 1, 0], vec![0, 0, 0]]);
        assert!(a.check_uniform_weight(2).is_err());
        let b = SparseMatrix::from_dense_columns(&f2, 3, &[vec![1, 1, 0], vec![0, 1, 1]]);
        assert!(b.check_uniform_weight(2).is_ok());
    }
}
