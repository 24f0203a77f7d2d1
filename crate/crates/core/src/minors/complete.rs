//! Complete matrices: every vector of small support appears up to scalar. Includes the
//! step-up construction that trades rank for completeness, the projective-geometry
//! recursion built from it, and the dense-basis greedy.

use std::collections::HashMap;

use serde::Serialize;

use super::target::pg_representation;
use super::witness::finalize_witness;
use super::{MinorError, MinorWitness};
use crate::gf::Field;
use crate::spmat::{
    contract_rep, normalize_column, simplify, DenseMatrix, IncrementalBasis, SparseColumn,
    SparseMatrix,
};

/// Calls `f` on every vector of `F^dim` with support size in `1..=ell` whose first
/// nonzero entry is 1, by support size and then lexicographically. Stops early when `f`
/// returns false.
fn for_each_normalized(field: &Field, dim: usize, ell: usize, mut f: impl FnMut(&SparseColumn) -> bool) {
    let nonzero: Vec<u8> = field.nonzero().collect();
    let nz = nonzero.len();
    for size in 1..=ell.min(dim) {
        let mut supp: Vec<usize> = (0..size).collect();
        loop {
            let combos = nz.pow(size as u32 - 1);
            for code in 0..combos {
                let mut x = code;
                let mut col: SparseColumn = Vec::with_capacity(size);
                col.push((supp[0], 1));
                for &i in &supp[1..] {
                    col.push((i, nonzero[x % nz]));
                    x /= nz;
                }
                if !f(&col) {
                    return;
                }
            }
            // next combination
            let mut i = size;
            while i > 0 && supp[i - 1] == dim - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            supp[i - 1] += 1;
            for j in i..size {
                supp[j] = supp[j - 1] + 1;
            }
        }
    }
}

/// The matrix whose columns are all normalized vectors of support at most `ell`.
pub fn complete_matrix(field: &Field, rows: usize, ell: usize) -> SparseMatrix {
    let mut cols = Vec::new();
    for_each_normalized(field, rows, ell, |c| {
        cols.push(c.clone());
        true
    });
    SparseMatrix::from_columns(field, rows, cols).expect("valid columns")
}

fn normalized_lookup(a: &SparseMatrix) -> HashMap<SparseColumn, usize> {
    let mut map = HashMap::new();
    for j in 0..a.n_cols() {
        if let Some(nc) = normalize_column(a.field(), a.column(j)) {
            map.entry(nc).or_insert(a.label(j));
        }
    }
    map
}

/// A nonzero vector of support at most `ell` with no parallel column, as a dense vector.
pub fn missing_complete_vector(a: &SparseMatrix, ell: usize) -> Option<Vec<u8>> {
    let have = normalized_lookup(a);
    let mut missing = None;
    for_each_normalized(a.field(), a.n_rows(), ell, |c| {
        if have.contains_key(c) {
            true
        } else {
            missing = Some(c.clone());
            false
        }
    });
    missing.map(|c| {
        let mut v = vec![0u8; a.n_rows()];
        for (i, x) in c {
            v[i] = x;
        }
        v
    })
}

/// Every nonzero vector of support at most `ell` is parallel to a column.
///
/// The row-count condition `rows >= ell` is not part of this check, so a rank-3 output
/// may count as 4-complete when it holds all seven points.
pub fn is_complete(a: &SparseMatrix, ell: usize) -> bool {
    missing_complete_vector(a, ell).is_none()
}

/// Row counts `n_k = (q^2 t)^(2^(t-k)) / q^2` for `k = 3..=t`.
pub fn n_schedule(q: u32, t: usize) -> Result<Vec<u128>, MinorError> {
    if t < 3 {
        return Err(MinorError::BadParameter(format!("t must be at least 3, got {t}")));
    }
    let base = (q as u128 * q as u128)
        .checked_mul(t as u128)
        .ok_or_else(|| MinorError::BadParameter("schedule overflows".into()))?;
    (3..=t)
        .map(|k| {
            let exp = 1u32
                .checked_shl((t - k) as u32)
                .ok_or_else(|| MinorError::BadParameter("schedule overflows".into()))?;
            base.checked_pow(exp)
                .map(|v| v / (q as u128 * q as u128))
                .ok_or_else(|| MinorError::BadParameter(format!("n_{k} overflows for t = {t}")))
        })
        .collect()
}

/// Contracts standard basis columns to delete every row from `keep` on.
fn reduce_rows(a: &SparseMatrix, keep: usize) -> Result<(SparseMatrix, Vec<usize>), MinorError> {
    if a.n_rows() <= keep {
        return Ok((a.clone(), Vec::new()));
    }
    let lookup = normalized_lookup(a);
    let labels: Vec<usize> = (keep..a.n_rows())
        .map(|i| {
            lookup.get(&vec![(i, 1u8)]).copied().ok_or_else(|| MinorError::NotComplete {
                ell: 1,
                missing: unit(a.n_rows(), i),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok((contract_rep(a, &labels)?, labels))
}

fn unit(dim: usize, i: usize) -> Vec<u8> {
    let mut v = vec![0u8; dim];
    v[i] = 1;
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepUpResult {
    /// `(ell+1)`-complete representation with `s` rows; column labels are the input's.
    pub matrix: SparseMatrix,
    /// Input labels contracted to reach it. Nothing is deleted.
    pub contracted: Vec<usize>,
}

/// Turns an `ell`-complete representation of rank at least `s + q^2 C(s,2)` into an
/// `(ell+1)`-complete minor of rank `s`.
///
/// Rows are first cut to exactly `s + q^2 C(s,2)` by contracting unit columns. The rows
/// past the first `s` are indexed by triples `(alpha, beta, I)`; the column parallel to
/// `y - alpha x_i - beta x_j` is contracted after adding `alpha` (resp. `beta`) times
/// row `(alpha, beta, I)` to row `i` (resp. `j`), which turns it into a unit column.
pub fn step_up(a: &SparseMatrix, ell: usize, s: usize) -> Result<StepUpResult, MinorError> {
    if ell < 3 {
        return Err(MinorError::BadParameter(format!("ell must be at least 3, got {ell}")));
    }
    if s < 2 {
        return Err(MinorError::BadParameter(format!("s must be at least 2, got {s}")));
    }
    let field = a.field().clone();
    let q = field.order() as usize;
    if a.n_rows() < ell {
        return Err(MinorError::BadParameter(format!(
            "{} rows cannot be {ell}-complete",
            a.n_rows()
        )));
    }
    if let Some(missing) = missing_complete_vector(a, ell) {
        return Err(MinorError::NotComplete { ell, missing });
    }
    let pairs: Vec<(usize, usize)> = (0..s)
        .flat_map(|i| (i + 1..s).map(move |j| (i, j)))
        .collect();
    let need = s + q * q * pairs.len();
    if a.n_rows() < need {
        return Err(MinorError::InsufficientRank {
            have: a.n_rows() as u128,
            need: need as u128,
        });
    }
    let (reduced, mut contracted) = reduce_rows(a, need)?;
    let lookup = normalized_lookup(&reduced);
    let row_of = |alpha: usize, beta: usize, p: usize| s + (alpha * q + beta) * pairs.len() + p;

    // (source row, target i, coefficient alpha, target j, coefficient beta)
    let mut ops = Vec::with_capacity(need - s);
    for alpha in 0..q {
        for beta in 0..q {
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let y = row_of(alpha, beta, p);
                let (a8, b8) = (alpha as u8, beta as u8);
                let mut v: SparseColumn = Vec::new();
                if a8 != 0 {
                    v.push((i, field.neg(a8)));
                }
                if b8 != 0 {
                    v.push((j, field.neg(b8)));
                }
                v.push((y, 1));
                let key = normalize_column(&field, &v).expect("nonzero");
                let label = *lookup.get(&key).ok_or_else(|| MinorError::NotComplete {
                    ell,
                    missing: {
                        let mut d = vec![0u8; need];
                        for &(r, x) in &v {
                            d[r] = x;
                        }
                        d
                    },
                })?;
                contracted.push(label);
                ops.push((y, i, a8, j, b8));
            }
        }
    }
    let dropped: std::collections::HashSet<usize> =
        contracted[contracted.len() - ops.len()..].iter().copied().collect();
    let mut out = SparseMatrix::new(&field, s);
    for k in 0..reduced.n_cols() {
        let label = reduced.label(k);
        if dropped.contains(&label) {
            continue;
        }
        let mut w = reduced.dense_column(k);
        for &(y, i, a8, j, b8) in &ops {
            let vy = w[y];
            if vy != 0 {
                w[i] = field.add(w[i], field.mul(a8, vy));
                w[j] = field.add(w[j], field.mul(b8, vy));
            }
        }
        let col: SparseColumn = (0..s).filter(|&r| w[r] != 0).map(|r| (r, w[r])).collect();
        out.push_column(label, col)?;
    }
    if let Some(missing) = missing_complete_vector(&out, ell + 1) {
        return Err(MinorError::NotComplete {
            ell: ell + 1,
            missing,
        });
    }
    Ok(StepUpResult {
        matrix: out,
        contracted,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgResult {
    pub witness: MinorWitness,
    /// The simplified rank-t matrix: one column per projective point.
    pub matrix: SparseMatrix,
}

/// A PG(t-1, q) minor of a 3-complete representation, by iterating [`step_up`] along
/// the schedule of [`n_schedule`]. Requires at least `n_3` rows.
pub fn pg_from_3complete(a: &SparseMatrix, t: usize) -> Result<PgResult, MinorError> {
    let field = a.field().clone();
    let schedule = n_schedule(field.order(), t)?;
    if let Some(missing) = missing_complete_vector(a, 3) {
        return Err(MinorError::NotComplete { ell: 3, missing });
    }
    let n3 = schedule[0];
    if (a.n_rows() as u128) < n3 {
        return Err(MinorError::InsufficientRank {
            have: a.n_rows() as u128,
            need: n3,
        });
    }
    let (mut cur, mut contracted) = reduce_rows(a, n3 as usize)?;
    for (idx, k) in (3..t).enumerate() {
        let s = schedule[idx + 1] as usize;
        let step = step_up(&cur, k, s)?;
        contracted.extend(step.contracted);
        cur = step.matrix;
    }
    if let Some(missing) = missing_complete_vector(&cur, t) {
        return Err(MinorError::NotComplete { ell: t, missing });
    }
    let lookup = normalized_lookup(&cur);
    let pg = pg_representation(&field, t);
    let embedding: Vec<usize> = (0..pg.n_cols())
        .map(|j| lookup[pg.column(j)])
        .collect();
    let matrix = simplify(&cur);
    let witness = finalize_witness(a, &pg, contracted, embedding)?;
    Ok(PgResult { witness, matrix })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DenseBasis {
    pub vectors: Vec<Vec<u8>>,
    pub counts: Vec<usize>,
    /// Minimum count for a column value to be dense.
    pub threshold: usize,
}

/// `r` independent column values of `b_r`, each occurring at least `delta / q^r` times
/// the column count, chosen greedily by frequency. `None` when the greedy stalls.
pub fn dense_basis(b_r: &DenseMatrix, delta: f64) -> Option<DenseBasis> {
    let r = b_r.n_rows();
    if r == 0 {
        return None;
    }
    let field = b_r.field();
    let q = field.order() as f64;
    let threshold = ((delta / q.powi(r as i32)) * b_r.n_cols() as f64).ceil().max(1.0) as usize;
    let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
    for j in 0..b_r.n_cols() {
        let c = b_r.column(j);
        if c.iter().any(|&x| x != 0) {
            *counts.entry(c).or_default() += 1;
        }
    }
    let mut ranked: Vec<(Vec<u8>, usize)> =
        counts.into_iter().filter(|&(_, n)| n >= threshold).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut basis = IncrementalBasis::new(field, r);
    let mut out = DenseBasis {
        vectors: Vec::new(),
        counts: Vec::new(),
        threshold,
    };
    for (v, n) in ranked {
        let sparse: Vec<(usize, u8)> = v
            .iter()
            .enumerate()
            .filter(|&(_, &x)| x != 0)
            .map(|(i, &x)| (i, x))
            .collect();
        if basis.insert(&sparse) {
            out.vectors.push(v);
            out.counts.push(n);
            if out.vectors.len() == r {
                return Some(out);
            }
        }
    }
    None
}
