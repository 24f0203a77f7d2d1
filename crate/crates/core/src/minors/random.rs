use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use super::witness::{finalize_witness, find_restriction_projective};
use super::{MinorError, MinorWitness, TargetMinor};
use crate::peel::two_core;
use crate::spmat::{normalize_column, rref, SparseMatrix};

/// Attempts between fresh random bases.
const RESEED_EVERY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotFoundReason {
    /// The host has lower rank than the target.
    RankTooSmall,
    /// The host's 2-core is independent, so every minor is free.
    FreeMatroid,
    BudgetExhausted,
}

impl NotFoundReason {
    pub fn code(self) -> &'static str {
        match self {
            NotFoundReason::RankTooSmall => "rank-too-small",
            NotFoundReason::FreeMatroid => "free-matroid",
            NotFoundReason::BudgetExhausted => "budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RandomizedOutcome {
    Found(MinorWitness),
    /// Not a certificate of absence, except for [`NotFoundReason::FreeMatroid`] and
    /// [`NotFoundReason::RankTooSmall`].
    NotFound(NotFoundReason),
}

impl RandomizedOutcome {
    pub fn witness(&self) -> Option<&MinorWitness> {
        match self {
            RandomizedOutcome::Found(w) => Some(w),
            RandomizedOutcome::NotFound(_) => None,
        }
    }
}

/// Randomized search: contract all but `rank(N)` elements of a random basis and look
/// for the target among the projected columns.
///
/// Targets without coloops are searched in the host's 2-core, whose complement consists
/// of coloops. Every returned witness has been replayed on `a`.
pub fn minor_randomized<R: Rng + ?Sized>(
    a: &SparseMatrix,
    target: &TargetMinor,
    budget: usize,
    rng: &mut R,
) -> Result<RandomizedOutcome, MinorError> {
    let field = a.field().clone();
    let n = target.representation(&field)?;
    let t = n.rank();
    let target_cols: Vec<Vec<u8>> = (0..n.n_cols()).map(|j| n.dense_column(j)).collect();
    let work = if target.has_coloop() {
        a.clone()
    } else {
        two_core(a).core
    };
    let rank = work.rank();
    if rank == work.n_cols() && t < n.n_cols() {
        return Ok(RandomizedOutcome::NotFound(NotFoundReason::FreeMatroid));
    }
    if rank < t {
        return Ok(RandomizedOutcome::NotFound(NotFoundReason::RankTooSmall));
    }
    let pg_lookup = match target {
        TargetMinor::Pg { .. } => Some(
            (0..n.n_cols())
                .map(|j| normalize_column(&field, n.column(j)).expect("nonzero point"))
                .collect::<Vec<_>>(),
        ),
        _ => None,
    };

    let m = work.n_cols();
    let mut labels: Vec<usize> = Vec::new();
    let mut coords = None;
    let mut pivot_of_row: Vec<usize> = Vec::new();
    let mut nonbasis: Vec<usize> = Vec::new();
    for attempt in 0..budget {
        if attempt % RESEED_EVERY == 0 {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(rng);
            let permuted = work.select_columns(&perm);
            let rr = rref(&permuted.to_dense());
            labels = permuted.labels().to_vec();
            pivot_of_row = rr.pivot_columns.clone();
            let mut is_pivot = vec![false; m];
            for &p in &pivot_of_row {
                is_pivot[p] = true;
            }
            nonbasis = (0..m).filter(|&j| !is_pivot[j]).collect();
            coords = Some(rr.rref);
        }
        let c = coords.as_ref().expect("set on the first attempt");
        let rows = choose_rows(c, &nonbasis, rank, t, rng);
        let mut in_t = vec![false; rank];
        for &i in &rows {
            in_t[i] = true;
        }
        let contract: Vec<usize> = (0..rank)
            .filter(|&i| !in_t[i])
            .map(|i| labels[pivot_of_row[i]])
            .collect();
        let mut is_contracted = vec![false; m];
        for i in (0..rank).filter(|&i| !in_t[i]) {
            is_contracted[pivot_of_row[i]] = true;
        }
        let mut cand_labels = Vec::new();
        let mut cands: Vec<Vec<u8>> = Vec::new();
        for j in (0..m).filter(|&j| !is_contracted[j]) {
            let v: Vec<u8> = rows.iter().map(|&i| c.get(i, j)).collect();
            if v.iter().any(|&x| x != 0) {
                cand_labels.push(labels[j]);
                cands.push(v);
            }
        }
        let assign = match &pg_lookup {
            Some(points) => cover_points(&field, &cands, points, t),
            None => find_restriction_projective(&field, &cands, t, &target_cols, n.n_rows()),
        };
        if let Some(assign) = assign {
            let embedding = assign.iter().map(|&k| cand_labels[k]).collect();
            if let Ok(w) = finalize_witness(a, &n, contract, embedding) {
                return Ok(RandomizedOutcome::Found(w));
            }
        }
    }
    Ok(RandomizedOutcome::NotFound(NotFoundReason::BudgetExhausted))
}

/// `t` rows of the coordinate matrix to keep. Half the time they come from the support
/// of a random non-basis column, which guarantees a dependent projection.
fn choose_rows<R: Rng + ?Sized>(
    c: &crate::spmat::DenseMatrix,
    nonbasis: &[usize],
    rank: usize,
    t: usize,
    rng: &mut R,
) -> Vec<usize> {
    if !nonbasis.is_empty() && rng.random_bool(0.5) {
        let j = nonbasis[rng.random_range(0..nonbasis.len())];
        let supp: Vec<usize> = (0..rank).filter(|&i| c.get(i, j) != 0).collect();
        if supp.len() >= t {
            let mut rows: Vec<usize> = index::sample(rng, supp.len(), t)
                .into_iter()
                .map(|k| supp[k])
                .collect();
            rows.sort_unstable();
            return rows;
        }
    }
    let mut rows = index::sample(rng, rank, t).into_vec();
    rows.sort_unstable();
    rows
}

/// Positions in `cands` realizing every normalized point, if all are present.
fn cover_points(
    field: &crate::gf::Field,
    cands: &[Vec<u8>],
    points: &[Vec<(usize, u8)>],
    t: usize,
) -> Option<Vec<usize>> {
    let mut seen: HashMap<Vec<(usize, u8)>, usize> = HashMap::new();
    for (k, v) in cands.iter().enumerate() {
        let sparse: Vec<(usize, u8)> = (0..t).filter(|&i| v[i] != 0).map(|i| (i, v[i])).collect();
        if let Some(nv) = normalize_column(field, &sparse) {
            seen.entry(nv).or_insert(k);
        }
    }
    points.iter().map(|p| seen.get(p).copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::minors::{minor_bruteforce, verify_witness};
    use crate::process::{dist_make, sample_matrix, DistSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn planted_fano_is_found() {
        let f = Field::binary();
        let pg = TargetMinor::Pg { t: 3, q: 2 };
        let p = pg.representation(&f).unwrap();
        let dist = dist_make(&f, 3, &DistSpec::Uniform).unwrap();
        let r = sample_matrix(&dist, 30, 20, 5).unwrap();
        let mut cols: Vec<Vec<(usize, u8)>> = p.columns().to_vec();
        for c in r.columns() {
            cols.push(c.iter().map(|&(i, v)| (i + 3, v)).collect());
        }
        let a = SparseMatrix::from_columns(&f, 33, cols).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = minor_randomized(&a, &pg, 1000, &mut rng).unwrap();
        let w = out.witness().expect("planted PG(2,2) found");
        verify_witness(&a, &p, w).unwrap();
    }

    #[test]
    fn free_matroid_not_found() {
        let f = Field::binary();
        let a = SparseMatrix::from_columns(&f, 5, (0..5).map(|i| vec![(i, 1)]).collect())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            minor_randomized(&a, &TargetMinor::U23, 100, &mut rng).unwrap(),
            RandomizedOutcome::NotFound(NotFoundReason::FreeMatroid)
        );
        assert_eq!(minor_bruteforce(&a, &TargetMinor::U23).unwrap(), None);
    }

    #[test]
    fn agrees_with_bruteforce_on_small_instances() {
        let f = Field::binary();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = TargetMinor::U23.representation(&f).unwrap();
        for trial in 0..200u64 {
            let rows = rng.random_range(3..7);
            let cols = rng.random_range(1..=10);
            let k = rng.random_range(2..=rows.min(3));
            let dist = dist_make(&f, k, &DistSpec::Uniform).unwrap();
            let a = sample_matrix(&dist, rows, cols, trial).unwrap();
            let brute = minor_bruteforce(&a, &TargetMinor::U23).unwrap();
            let out = minor_randomized(&a, &TargetMinor::U23, 200, &mut rng).unwrap();
            if let Some(w) = out.witness() {
                verify_witness(&a, &n, w).unwrap();
                assert!(brute.is_some(), "false positive on trial {trial}");
            }
            if let Some(w) = &brute {
                verify_witness(&a, &n, w).unwrap();
            }
        }
    }
}
