use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{rank_of_mask, MinorError};
use crate::gf::Field;
use crate::spmat::{contract_rep, delete_rep, rref, DenseMatrix, IncrementalBasis, SparseMatrix};

/// Largest target checked against its full independence oracle.
const SUBSET_CHECK_MAX: usize = 16;

/// `N = M / contract_set \ delete_set`, with target column `i` realized by the host
/// column labelled `embedding[i]`.
///
/// When nonempty, `scalars[i]` is the factor with `host_i = scalars[i] * T * target_i`
/// for one invertible `T`, taken in coordinates after the replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorWitness {
    pub contract_set: Vec<usize>,
    pub delete_set: Vec<usize>,
    pub embedding: Vec<usize>,
    pub scalars: Vec<u8>,
}

/// Coordinates of `cols` (each of length `dim`) with respect to their own row space.
fn coordinates(field: &Field, dim: usize, cols: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let rows: Vec<Vec<u8>> = (0..dim)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    let m = DenseMatrix::from_rows(field, cols.len(), &rows);
    let rr = rref(&m);
    (0..cols.len())
        .map(|j| (0..rr.rank).map(|i| rr.rref.get(i, j)).collect())
        .collect()
}

fn sparse_of(v: &[u8]) -> Vec<(usize, u8)> {
    v.iter()
        .enumerate()
        .filter(|&(_, &x)| x != 0)
        .map(|(i, &x)| (i, x))
        .collect()
}

/// Greedy basis positions of `cols` in order.
fn greedy_basis(field: &Field, dim: usize, cols: &[Vec<u8>]) -> Vec<usize> {
    let mut b = IncrementalBasis::new(field, dim);
    (0..cols.len()).filter(|&j| b.insert(&sparse_of(&cols[j]))).collect()
}

/// Coordinates of every column in the basis formed by the columns at `basis`, or `None`
/// if those do not form a basis of the column span.
fn coords_in_basis(
    field: &Field,
    dim: usize,
    cols: &[Vec<u8>],
    basis: &[usize],
) -> Option<Vec<Vec<u8>>> {
    let order: Vec<usize> = basis.iter().copied().chain(0..cols.len()).collect();
    let rows: Vec<Vec<u8>> = (0..dim)
        .map(|i| order.iter().map(|&j| cols[j][i]).collect())
        .collect();
    let rr = rref(&DenseMatrix::from_rows(field, order.len(), &rows));
    let r = basis.len();
    if rr.rank != r || rr.pivot_columns != (0..r).collect::<Vec<_>>() {
        return None;
    }
    Some(
        (0..cols.len())
            .map(|j| (0..r).map(|i| rr.rref.get(i, r + j)).collect())
            .collect(),
    )
}

/// Scalars `s` with `host_j = s_j * T * target_j` for some invertible `T`, if any.
///
/// Both inputs are lists of columns of lengths `target_dim` and `host_dim`.
pub fn projective_scalars(
    field: &Field,
    target: &[Vec<u8>],
    target_dim: usize,
    host: &[Vec<u8>],
    host_dim: usize,
) -> Option<Vec<u8>> {
    if target.len() != host.len() {
        return None;
    }
    let basis = greedy_basis(field, target_dim, target);
    let c = coords_in_basis(field, target_dim, target, &basis)?;
    let d = coords_in_basis(field, host_dim, host, &basis)?;
    let r = basis.len();
    let n = target.len();
    for j in 0..n {
        for b in 0..r {
            if (c[j][b] == 0) != (d[j][b] == 0) {
                return None;
            }
        }
    }
    let inv = |x: u8| field.inv(x).expect("nonzero");
    let mut scale_b: Vec<Option<u8>> = vec![None; r];
    let mut lambda: Vec<Option<u8>> = vec![None; n];
    for root in 0..r {
        if scale_b[root].is_some() {
            continue;
        }
        scale_b[root] = Some(1);
        let mut queue = VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            let db = scale_b[b].expect("set before queueing");
            for j in 0..n {
                if c[j][b] == 0 || lambda[j].is_some() {
                    continue;
                }
                let lj = field.mul(d[j][b], inv(field.mul(db, c[j][b])));
                lambda[j] = Some(lj);
                for b2 in 0..r {
                    if c[j][b2] != 0 && scale_b[b2].is_none() {
                        scale_b[b2] = Some(field.mul(d[j][b2], inv(field.mul(lj, c[j][b2]))));
                        queue.push_back(b2);
                    }
                }
            }
        }
    }
    let lambda: Vec<u8> = lambda.into_iter().map(|l| l.unwrap_or(1)).collect();
    let scale_b: Vec<u8> = scale_b.into_iter().map(|s| s.expect("every root set")).collect();
    for j in 0..n {
        for b in 0..r {
            let want = field.mul(lambda[j], field.mul(scale_b[b], c[j][b]));
            if d[j][b] != want {
                return None;
            }
        }
    }
    Some(lambda)
}

/// Checks `d_jb = s_j / s_{basis b} * c_jb` in the target's greedy basis.
fn scalars_consistent(
    field: &Field,
    target: &[Vec<u8>],
    target_dim: usize,
    host: &[Vec<u8>],
    host_dim: usize,
    scalars: &[u8],
) -> bool {
    if scalars.len() != target.len() || scalars.contains(&0) {
        return false;
    }
    let basis = greedy_basis(field, target_dim, target);
    let (Some(c), Some(d)) = (
        coords_in_basis(field, target_dim, target, &basis),
        coords_in_basis(field, host_dim, host, &basis),
    ) else {
        return false;
    };
    (0..target.len()).all(|j| {
        basis.iter().enumerate().all(|(b, &jb)| {
            let ratio = field.mul(scalars[j], field.inv(scalars[jb]).expect("nonzero"));
            d[j][b] == field.mul(ratio, c[j][b])
        })
    })
}

fn replay(a: &SparseMatrix, w: &MinorWitness) -> Result<Vec<Vec<u8>>, MinorError> {
    let mut seen = HashSet::new();
    for &l in w.contract_set.iter().chain(&w.delete_set).chain(&w.embedding) {
        if !seen.insert(l) {
            return Err(MinorError::InvalidWitness(format!("label {l} used twice")));
        }
    }
    if seen.len() != a.n_cols() || a.labels().iter().any(|l| !seen.contains(l)) {
        return Err(MinorError::InvalidWitness(
            "contract, delete and embedding sets do not partition the columns".into(),
        ));
    }
    let m = delete_rep(a, &w.delete_set)?;
    let m = contract_rep(&m, &w.contract_set)?;
    w.embedding
        .iter()
        .map(|&l| {
            let j = m.index_of(l).ok_or(MinorError::InvalidWitness(format!(
                "label {l} missing after replay"
            )))?;
            Ok(m.dense_column(j))
        })
        .collect()
}

/// Replays `w` on `a` and compares the result with the target representation `n`.
///
/// Targets with at most 16 columns are compared on every subset's rank; larger ones must
/// be projectively equivalent. Nonempty scalars are checked either way.
pub fn verify_witness(a: &SparseMatrix, n: &SparseMatrix, w: &MinorWitness) -> Result<(), MinorError> {
    let field = a.field();
    if n.field().order() != field.order() {
        return Err(MinorError::FieldMismatch {
            expected: n.field().order(),
            found: field.order(),
        });
    }
    if w.embedding.len() != n.n_cols() {
        return Err(MinorError::InvalidWitness(format!(
            "embedding has {} entries for {} target columns",
            w.embedding.len(),
            n.n_cols()
        )));
    }
    let host = replay(a, w)?;
    let host_dim = host.first().map_or(0, Vec::len);
    let host = coordinates(field, host_dim, &host);
    let host_dim = host.first().map_or(0, Vec::len);
    let target: Vec<Vec<u8>> = (0..n.n_cols()).map(|j| n.dense_column(j)).collect();
    let tdim = n.n_rows();
    if n.n_cols() <= SUBSET_CHECK_MAX {
        for mask in 0u64..1 << n.n_cols() {
            let (rt, rh) = (
                rank_of_mask(field, tdim, &target, mask),
                rank_of_mask(field, host_dim, &host, mask),
            );
            if rt != rh {
                return Err(MinorError::InvalidWitness(format!(
                    "subset {mask:#b} has rank {rh} in the host and {rt} in the target"
                )));
            }
        }
    } else if projective_scalars(field, &target, tdim, &host, host_dim).is_none() {
        return Err(MinorError::InvalidWitness(
            "replayed columns are not projectively equivalent to the target".into(),
        ));
    }
    if !w.scalars.is_empty() && !scalars_consistent(field, &target, tdim, &host, host_dim, &w.scalars)
    {
        return Err(MinorError::InvalidWitness("scalars do not match".into()));
    }
    Ok(())
}

/// Fills in the delete set and scalars, then verifies.
pub(crate) fn finalize_witness(
    a: &SparseMatrix,
    n: &SparseMatrix,
    contract_set: Vec<usize>,
    embedding: Vec<usize>,
) -> Result<MinorWitness, MinorError> {
    let used: HashSet<usize> = contract_set.iter().chain(&embedding).copied().collect();
    let delete_set = a.labels().iter().copied().filter(|l| !used.contains(l)).collect();
    let mut w = MinorWitness {
        contract_set,
        delete_set,
        embedding,
        scalars: Vec::new(),
    };
    let host = replay(a, &w)?;
    let host_dim = host.first().map_or(0, Vec::len);
    let target: Vec<Vec<u8>> = (0..n.n_cols()).map(|j| n.dense_column(j)).collect();
    if let Some(s) = projective_scalars(a.field(), &target, n.n_rows(), &host, host_dim) {
        w.scalars = s;
    }
    verify_witness(a, n, &w)?;
    Ok(w)
}

/// Injective assignment of target columns to candidate columns that preserves the rank
/// of every subset. Intended for targets of at most a dozen columns.
pub(crate) fn find_restriction_exact(
    field: &Field,
    cands: &[Vec<u8>],
    cand_dim: usize,
    target: &[Vec<u8>],
    target_dim: usize,
) -> Option<Vec<usize>> {
    let nt = target.len();
    if nt > cands.len() || nt > 20 {
        return None;
    }
    let target_ranks: Vec<usize> = (0u64..1 << nt)
        .map(|m| rank_of_mask(field, target_dim, target, m))
        .collect();
    let mut assign = Vec::with_capacity(nt);
    let mut used = vec![false; cands.len()];
    fn go(
        field: &Field,
        cands: &[Vec<u8>],
        cand_dim: usize,
        target_ranks: &[usize],
        nt: usize,
        assign: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let i = assign.len();
        if i == nt {
            return true;
        }
        for c in 0..cands.len() {
            if used[c] {
                continue;
            }
            assign.push(c);
            let mapped: Vec<Vec<u8>> = assign.iter().map(|&k| cands[k].clone()).collect();
            let ok = (0u64..1 << i).all(|s| {
                let m = s | 1 << i;
                rank_of_mask(field, cand_dim, &mapped, m) == target_ranks[m as usize]
            });
            if ok {
                used[c] = true;
                if go(field, cands, cand_dim, target_ranks, nt, assign, used) {
                    return true;
                }
                used[c] = false;
            }
            assign.pop();
        }
        false
    }
    go(field, cands, cand_dim, &target_ranks, nt, &mut assign, &mut used).then_some(assign)
}

fn normalized(field: &Field, v: &[u8]) -> Option<Vec<u8>> {
    let lead = *v.iter().find(|&&x| x != 0)?;
    let inv = field.inv(lead).expect("nonzero");
    Some(v.iter().map(|&x| field.mul(x, inv)).collect())
}

/// Cap on basis images tried by [`find_restriction_projective`].
const PROJECTIVE_TUPLE_CAP: usize = 200_000;

/// Finds target columns among `cands` up to a projective change of coordinates.
///
/// Complete for fields where representations are projectively unique, such as GF(2)
/// and GF(3); a heuristic otherwise.
pub(crate) fn find_restriction_projective(
    field: &Field,
    cands: &[Vec<u8>],
    cand_dim: usize,
    target: &[Vec<u8>],
    target_dim: usize,
) -> Option<Vec<usize>> {
    let basis = greedy_basis(field, target_dim, target);
    let c = coords_in_basis(field, target_dim, target, &basis)?;
    let r = basis.len();
    let mut lookup: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut points: Vec<usize> = Vec::new();
    for (k, v) in cands.iter().enumerate() {
        if let Some(nv) = normalized(field, v) {
            lookup.entry(nv).or_insert_with(|| {
                points.push(k);
                k
            });
        }
    }
    let nonzero: Vec<u8> = field.nonzero().collect();
    let mut tries = 0usize;
    let mut tuple: Vec<usize> = Vec::with_capacity(r);
    #[allow(clippy::too_many_arguments)]
    fn extend(
        field: &Field,
        cands: &[Vec<u8>],
        cand_dim: usize,
        points: &[usize],
        r: usize,
        tuple: &mut Vec<usize>,
        tries: &mut usize,
        found: &mut dyn FnMut(&[usize]) -> Option<Vec<usize>>,
    ) -> Option<Vec<usize>> {
        if tuple.len() == r {
            *tries += 1;
            return found(tuple);
        }
        for &p in points {
            if *tries >= PROJECTIVE_TUPLE_CAP {
                return None;
            }
            if tuple.contains(&p) {
                continue;
            }
            tuple.push(p);
            let cols: Vec<Vec<u8>> = tuple.iter().map(|&k| cands[k].clone()).collect();
            let mask = (1u64 << tuple.len()) - 1;
            if rank_of_mask(field, cand_dim, &cols, mask) == tuple.len() {
                if let Some(s) = extend(field, cands, cand_dim, points, r, tuple, tries, found) {
                    return Some(s);
                }
            }
            tuple.pop();
        }
        None
    }
    let mut found = |tuple: &[usize]| -> Option<Vec<usize>> {
        let combos = nonzero.len().pow(r.saturating_sub(1) as u32);
        for code in 0..combos {
            let mut lam = vec![1u8; r];
            let mut x = code;
            for l in lam.iter_mut().skip(1) {
                *l = nonzero[x % nonzero.len()];
                x /= nonzero.len();
            }
            let mut assign = Vec::with_capacity(target.len());
            let mut ok = true;
            for cj in &c {
                let mut v = vec![0u8; cand_dim];
                for b in 0..r {
                    if cj[b] == 0 {
                        continue;
                    }
                    let coef = field.mul(cj[b], lam[b]);
                    for (vi, &pi) in v.iter_mut().zip(&cands[tuple[b]]) {
                        *vi = field.add(*vi, field.mul(coef, pi));
                    }
                }
                match normalized(field, &v).and_then(|nv| lookup.get(&nv)) {
                    Some(&k) => assign.push(k),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let mut s = assign.clone();
                s.sort_unstable();
                s.dedup();
                if s.len() == assign.len() {
                    return Some(assign);
                }
            }
        }
        None
    };
    extend(field, cands, cand_dim, &points, r, &mut tuple, &mut tries, &mut found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minors::TargetMinor;

    fn cols(m: &SparseMatrix) -> Vec<Vec<u8>> {
        (0..m.n_cols()).map(|j| m.dense_column(j)).collect()
    }

    #[test]
    fn scalars_of_rescaled_copy() {
        let f = Field::with_order(3).unwrap();
        let n = TargetMinor::U23.representation(&f).unwrap();
        let t = cols(&n);
        // host = 2 * [e1, e2, e1 + e2] after swapping rows
        let h = vec![vec![0, 2], vec![2, 0], vec![2, 2]];
        let s = projective_scalars(&f, &t, 2, &h, 2).unwrap();
        assert!(scalars_consistent(&f, &t, 2, &h, 2, &s));
        let bad = vec![vec![0, 2], vec![2, 0], vec![0, 1]];
        assert!(projective_scalars(&f, &t, 2, &bad, 2).is_none());
    }

    #[test]
    fn exact_and_projective_search_agree_on_fano() {
        let f = Field::binary();
        let pg = TargetMinor::Pg { t: 3, q: 2 }.representation(&f).unwrap();
        let mut host = cols(&pg);
        host.reverse();
        host.push(vec![0, 0, 0]);
        let t = cols(&pg);
        let e = find_restriction_exact(&f, &host, 3, &t, 3).unwrap();
        let p = find_restriction_projective(&f, &host, 3, &t, 3).unwrap();
        assert_eq!(e.len(), 7);
        assert_eq!(p.len(), 7);
        let u = cols(&TargetMinor::U23.representation(&f).unwrap());
        let free = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        assert!(find_restriction_exact(&f, &free, 3, &u, 2).is_none());
        assert!(find_restriction_projective(&f, &free, 3, &u, 2).is_none());
    }

    #[test]
    fn bad_partition_rejected() {
        let f = Field::binary();
        let a = SparseMatrix::from_columns(
            &f,
            2,
            vec![vec![(0, 1)], vec![(1, 1)], vec![(0, 1), (1, 1)]],
        )
        .unwrap();
        let n = TargetMinor::U23.representation(&f).unwrap();
        let good = MinorWitness {
            contract_set: vec![],
            delete_set: vec![],
            embedding: vec![0, 1, 2],
            scalars: vec![],
        };
        verify_witness(&a, &n, &good).unwrap();
        let dup = MinorWitness {
            embedding: vec![0, 1, 1],
            ..good.clone()
        };
        assert!(verify_witness(&a, &n, &dup).is_err());
        let wrong = MinorWitness {
            embedding: vec![0, 2, 1],
            scalars: vec![1, 1, 1],
            ..good
        };
        // Still U(2,3): any bijection works, and over GF(2) every scalar is 1.
        verify_witness(&a, &n, &wrong).unwrap();
    }
}
