use super::witness::{finalize_witness, find_restriction_exact};
use super::{MinorError, MinorWitness, TargetMinor};
use crate::spmat::{contract_rep, SparseMatrix};

pub const BRUTE_FORCE_MAX_COLUMNS: usize = 12;

/// Exhaustive minor test.
///
/// Every minor can be written `M / X \ Y` with `X` independent of size
/// `rank(M) - rank(N)` and `N` a restriction of `M / X`, so the search runs over such
/// `X` and matches columns of `M / X` by comparing subset ranks. `Ok(None)` certifies
/// absence.
pub fn minor_bruteforce(
    a: &SparseMatrix,
    target: &TargetMinor,
) -> Result<Option<MinorWitness>, MinorError> {
    if a.n_cols() > BRUTE_FORCE_MAX_COLUMNS {
        return Err(MinorError::TooLarge {
            cols: a.n_cols(),
            cap: BRUTE_FORCE_MAX_COLUMNS,
        });
    }
    let field = a.field();
    let n = target.representation(field)?;
    let target_cols: Vec<Vec<u8>> = (0..n.n_cols()).map(|j| n.dense_column(j)).collect();
    let (ra, rn) = (a.rank_direct(), n.rank());
    if rn > ra || n.n_cols() > a.n_cols() {
        return Ok(None);
    }
    let size = ra - rn;
    let m = a.n_cols();
    for mask in 0u32..1 << m {
        if mask.count_ones() as usize != size {
            continue;
        }
        let xs: Vec<usize> = (0..m).filter(|&j| mask >> j & 1 == 1).collect();
        if a.rank_of(&xs) != size {
            continue;
        }
        let x_labels: Vec<usize> = xs.iter().map(|&j| a.label(j)).collect();
        let c = contract_rep(a, &x_labels)?;
        let cands: Vec<Vec<u8>> = (0..c.n_cols()).map(|j| c.dense_column(j)).collect();
        if let Some(assign) =
            find_restriction_exact(field, &cands, c.n_rows(), &target_cols, n.n_rows())
        {
            let embedding = assign.iter().map(|&k| c.label(k)).collect();
            return finalize_witness(a, &n, x_labels, embedding).map(Some);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::minors::verify_witness;

    #[test]
    fn fano_line_after_contraction() {
        let f = Field::binary();
        let a = SparseMatrix::from_columns(
            &f,
            3,
            vec![vec![(0, 1)], vec![(1, 1)], vec![(2, 1)], vec![(0, 1), (1, 1), (2, 1)]],
        )
        .unwrap();
        let w = minor_bruteforce(&a, &TargetMinor::U23).unwrap().unwrap();
        assert_eq!(w.contract_set.len(), 1);
        let n = TargetMinor::U23.representation(&f).unwrap();
        verify_witness(&a, &n, &w).unwrap();
    }

    #[test]
    fn free_matroid_has_no_circuit_minor() {
        let f = Field::binary();
        let a = SparseMatrix::from_columns(&f, 4, (0..4).map(|i| vec![(i, 1)]).collect())
            .unwrap();
        assert_eq!(minor_bruteforce(&a, &TargetMinor::U23).unwrap(), None);
    }

    #[test]
    fn single_column_target() {
        let f = Field::binary();
        // A one-column target has no circuit, so build it without validation.
        let n = SparseMatrix::from_columns(&f, 1, vec![vec![(0, 1)]]).unwrap();
        let a = SparseMatrix::from_columns(&f, 2, vec![vec![(0, 1), (1, 1)]]).unwrap();
        let w = minor_bruteforce(&a, &TargetMinor::Explicit(n.clone()))
            .unwrap()
            .unwrap();
        assert_eq!(w.embedding, vec![0]);
        verify_witness(&a, &n, &w).unwrap();
    }

    #[test]
    fn too_large() {
        let f = Field::binary();
        let a = SparseMatrix::from_columns(&f, 13, (0..13).map(|i| vec![(i, 1)]).collect())
            .unwrap();
        assert!(matches!(
            minor_bruteforce(&a, &TargetMinor::U23),
            Err(MinorError::TooLarge { cols: 13, cap: 12 })
        ));
    }
}
