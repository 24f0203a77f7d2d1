//! The supercritical construction run on a concrete subcritical matrix.
//!
//! A first round of random columns extends the 2-core's columns to an independent set
//! `U` whose square part `A''` is inverted into `B`. A second round supplies vectors in
//! the span of `U`; contracting all of `U` except its first `r` columns leaves a rank-`r`
//! matrix whose new columns are `B^[r] x'`. Every algebraic identity the construction
//! relies on is checked and recorded.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dense_basis, DenseBasis, MinorError};
use crate::peel::{hypergraph_of_matrix, two_core};
use crate::process::{sample_column, ColumnDistribution};
use crate::spmat::{
    contract_rep, invert, rank, rref, DenseMatrix, IncrementalBasis, SparseColumn, SparseMatrix,
};
use crate::tanner::{alpha_subgraph, combine_rows};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineParams {
    /// First-round size as a fraction of `n`; defaults to `n^(-1/8)`.
    pub eta: Option<f64>,
    /// Second-round size as a fraction of `n`; defaults to `n^(-1/4)`. At most `eta`.
    pub eps1: Option<f64>,
    pub r: usize,
    pub delta: f64,
    pub seed: u64,
    /// Largest `|J|` in the row-combination diagnostics.
    pub max_j: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            eta: None,
            eps1: None,
            r: 8,
            delta: 0.01,
            seed: 0,
            max_j: 3,
        }
    }
}

/// Finite-size failures of events that hold only asymptotically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineFailure {
    /// The 2-core's columns are dependent.
    CoreDependent,
    /// Fewer than `r` columns in the core or in `U`.
    UTooSmall,
    Singular,
    /// The second round produced no usable vector.
    VEmpty,
    NoDenseBasis,
}

impl PipelineFailure {
    pub fn code(self) -> &'static str {
        match self {
            PipelineFailure::CoreDependent => "core-dependent",
            PipelineFailure::UTooSmall => "u-too-small",
            PipelineFailure::Singular => "singular",
            PipelineFailure::VEmpty => "v-empty",
            PipelineFailure::NoDenseBasis => "no-dense-basis",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipelineDiagnostics {
    pub a3_independent: bool,
    pub b_inverts_a_dd: bool,
    /// First-round vectors leaving the core rows, and those already in the span.
    pub rejected_support: usize,
    pub rejected_span: usize,
    /// Second-round vectors in `V` with a nonzero tail `y' - A* B x'`.
    pub residual_violations: usize,
    pub a6_rank: usize,
    pub a6_rows: usize,
    /// The contracted matrix is row equivalent to `[I | B^[r] X']`.
    pub a6_matches_formula: bool,
    /// Row combinations of `B^[r]` checked, and those lighter than `delta n'`.
    pub combos_checked: usize,
    pub light_combos: usize,
    pub min_combo_weight: Option<f64>,
    /// Degree-one vertices outside `J` over all alpha-subgraphs.
    pub degree_one_exceptions: usize,
    /// Vectors `sum alpha_j u_j` with `1 <= |J| <= k` and how many appear in `A6`.
    pub s_total: usize,
    pub s_hits: usize,
    /// Sets `J` of size `k` and those hit by at least one pattern.
    pub s_sets: usize,
    pub s_sets_hit: usize,
}

#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub n: usize,
    pub m1: usize,
    pub eta: f64,
    pub eps1: f64,
    /// `|V| / n`.
    pub eps2: f64,
    pub r: usize,
    pub delta: f64,
    /// Rows of `A1` in its 2-core, ascending.
    pub core_rows: Vec<usize>,
    pub n1: usize,
    pub u0: Vec<usize>,
    pub u: Vec<usize>,
    pub first_round: Vec<SparseColumn>,
    pub second_round: Vec<SparseColumn>,
    /// Over the core rows; columns are `U`.
    pub a3: SparseMatrix,
    /// Core-row positions forming `A''`, in the row order of `A''` and of `B`'s columns.
    pub a_dd_rows: Vec<usize>,
    pub a_star_rows: Vec<usize>,
    pub a_dd: DenseMatrix,
    pub b: DenseMatrix,
    pub b_r: DenseMatrix,
    pub v: Vec<usize>,
    /// Contraction of `[A3 | V]` by `U \ [r]`, cut to a row basis.
    pub a6: SparseMatrix,
    /// `[I_r | B^[r] X']`.
    pub a6_formula: DenseMatrix,
    pub dense_basis: Option<DenseBasis>,
    pub diagnostics: PipelineDiagnostics,
    pub failure: Option<PipelineFailure>,
}

impl PipelineTrace {
    pub fn n_prime(&self) -> usize {
        self.u.len()
    }

    pub fn failure_code(&self) -> &'static str {
        self.failure.map_or("", PipelineFailure::code)
    }

    /// A run that reached the contraction with invertible `A''`.
    pub fn reached_contraction(&self) -> bool {
        !matches!(
            self.failure,
            Some(PipelineFailure::CoreDependent | PipelineFailure::UTooSmall | PipelineFailure::Singular)
        )
    }

    /// Names of the exact invariants that fail on a run that reached the contraction.
    pub fn invariant_violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.reached_contraction() {
            return out;
        }
        let d = &self.diagnostics;
        if !d.a3_independent {
            out.push("a3-independent");
        }
        if !d.b_inverts_a_dd {
            out.push("b-inverts-a-dd");
        }
        if d.residual_violations > 0 {
            out.push("residual-zero");
        }
        if d.a6_rank != self.r || d.a6_rows != self.r {
            out.push("a6-rank");
        }
        if !d.a6_matches_formula {
            out.push("a6-formula");
        }
        if d.degree_one_exceptions > 0 {
            out.push("degree-one-outside-j");
        }
        out
    }

    pub fn summary(&self) -> PipelineSummary {
        PipelineSummary {
            n: self.n,
            m1: self.m1,
            eta: self.eta,
            eps1: self.eps1,
            eps2: self.eps2,
            r: self.r,
            delta: self.delta,
            core_rows: self.core_rows.len(),
            n1: self.n1,
            n_prime: self.n_prime(),
            v: self.v.len(),
            dense_basis: self.dense_basis.clone(),
            diagnostics: self.diagnostics.clone(),
            failure_code: self.failure_code(),
            invariant_violations: self.invariant_violations(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub n: usize,
    pub m1: usize,
    pub eta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub r: usize,
    pub delta: f64,
    pub core_rows: usize,
    pub n1: usize,
    pub n_prime: usize,
    pub v: usize,
    pub dense_basis: Option<DenseBasis>,
    pub diagnostics: PipelineDiagnostics,
    pub failure_code: &'static str,
    pub invariant_violations: Vec<&'static str>,
}

fn fraction(name: &str, value: Option<f64>, default: f64) -> Result<f64, MinorError> {
    let v = value.unwrap_or(default);
    if !(0.0..=1.0).contains(&v) {
        return Err(MinorError::BadParameter(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(v)
}

/// Maps a column of `A1`'s row space to core-row positions, if its support stays there.
fn to_core(col: &SparseColumn, row_pos: &[Option<usize>]) -> Option<SparseColumn> {
    col.iter().map(|&(i, v)| row_pos[i].map(|p| (p, v))).collect()
}

/// Every `(J, alpha)` with `J` a subset of `0..r` of size `1..=max_j` and `alpha`
/// nowhere zero.
fn combos(field: &crate::gf::Field, r: usize, max_j: usize) -> Vec<(Vec<usize>, Vec<u8>)> {
    let nonzero: Vec<u8> = field.nonzero().collect();
    let mut out = Vec::new();
    for mask in 1u64..1 << r {
        let j: Vec<usize> = (0..r).filter(|&i| mask >> i & 1 == 1).collect();
        if j.len() > max_j {
            continue;
        }
        for code in 0..nonzero.len().pow(j.len() as u32) {
            let mut x = code;
            let alpha = j
                .iter()
                .map(|_| {
                    let a = nonzero[x % nonzero.len()];
                    x /= nonzero.len();
                    a
                })
                .collect();
            out.push((j.clone(), alpha));
        }
    }
    out
}

/// Runs the construction on `a1`, drawing both rounds from `dist` with `params.seed`.
pub fn pipeline_run(
    a1: &SparseMatrix,
    dist: &ColumnDistribution,
    params: &PipelineParams,
) -> Result<PipelineTrace, MinorError> {
    let field = a1.field().clone();
    if dist.field().order() != field.order() {
        return Err(MinorError::FieldMismatch {
            expected: dist.field().order(),
            found: field.order(),
        });
    }
    let n = a1.n_rows();
    let nf = n as f64;
    let eta = fraction("eta", params.eta, nf.powf(-0.125))?;
    let eps1 = fraction("eps1", params.eps1, nf.powf(-0.25))?;
    if eps1 > eta {
        return Err(MinorError::BadParameter(format!(
            "eps1 = {eps1} must not exceed eta = {eta}"
        )));
    }
    if params.r == 0 || params.r > 24 {
        return Err(MinorError::BadParameter(format!("r must lie in 1..=24, got {}", params.r)));
    }
    let r = params.r;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let pr = two_core(a1);
    if pr.is_empty() {
        return Err(MinorError::CoreEmpty);
    }
    let core_rows: Vec<usize> = pr.kept_rows.clone();
    let mut row_pos = vec![None; n];
    for (p, &i) in core_rows.iter().enumerate() {
        row_pos[i] = Some(p);
    }
    let n_core_rows = core_rows.len();
    let n1 = pr.core.n_cols();
    let mut perm: Vec<usize> = (0..n1).collect();
    perm.shuffle(&mut rng);
    let core = pr.core.select_columns(&perm);
    let u0: Vec<usize> = core.labels().to_vec();

    let empty = DenseMatrix::zeros(&field, 0, 0);
    let mut trace = PipelineTrace {
        n,
        m1: a1.n_cols(),
        eta,
        eps1,
        eps2: 0.0,
        r,
        delta: params.delta,
        core_rows,
        n1,
        u0: u0.clone(),
        u: u0.clone(),
        first_round: Vec::new(),
        second_round: Vec::new(),
        a3: core.clone(),
        a_dd_rows: Vec::new(),
        a_star_rows: Vec::new(),
        a_dd: empty.clone(),
        b: empty.clone(),
        b_r: empty.clone(),
        v: Vec::new(),
        a6: SparseMatrix::new(&field, 0),
        a6_formula: empty,
        dense_basis: None,
        diagnostics: PipelineDiagnostics::default(),
        failure: None,
    };

    let mut basis = IncrementalBasis::new(&field, n_core_rows);
    if !core.columns().iter().all(|c| basis.insert(c)) {
        trace.failure = Some(PipelineFailure::CoreDependent);
        return Ok(trace);
    }

    // First round.
    let c1 = (eta * nf).round() as usize;
    let mut a3 = core;
    let mut next_label = a1.labels().iter().max().map_or(0, |&l| l + 1);
    for _ in 0..c1 {
        let col = sample_column(dist, n, &mut rng)?;
        let label = next_label;
        next_label += 1;
        match to_core(&col, &row_pos) {
            None => trace.diagnostics.rejected_support += 1,
            Some(mapped) => {
                if basis.insert(&mapped) {
                    a3.push_column(label, mapped)?;
                } else {
                    trace.diagnostics.rejected_span += 1;
                }
            }
        }
        trace.first_round.push(col);
    }
    trace.u = a3.labels().to_vec();
    let n_prime = a3.n_cols();
    let a3_dense = a3.to_dense();
    trace.diagnostics.a3_independent = rank(&a3_dense) == n_prime;
    trace.a3 = a3.clone();
    if n1 < r || n_prime < r {
        trace.failure = Some(PipelineFailure::UTooSmall);
        return Ok(trace);
    }

    // A'' from a row basis of A3.
    let a_dd_rows = rref(&a3_dense.transpose()).pivot_columns;
    let in_dd: HashSet<usize> = a_dd_rows.iter().copied().collect();
    let a_star_rows: Vec<usize> = (0..n_core_rows).filter(|i| !in_dd.contains(i)).collect();
    let all_u: Vec<usize> = (0..n_prime).collect();
    let a_dd = a3_dense.select(&a_dd_rows, &all_u);
    let a_star = a3_dense.select(&a_star_rows, &all_u);
    trace.a_dd_rows = a_dd_rows.clone();
    trace.a_star_rows = a_star_rows.clone();
    trace.a_dd = a_dd.clone();
    let b = match invert(&a_dd) {
        Ok(b) => b,
        Err(_) => {
            trace.failure = Some(PipelineFailure::Singular);
            return Ok(trace);
        }
    };
    trace.diagnostics.b_inverts_a_dd = b.mul(&a_dd).is_identity();
    let first_r: Vec<usize> = (0..r).collect();
    let all_cols: Vec<usize> = (0..n_prime).collect();
    let b_r = b.select(&first_r, &all_cols);

    // Second round.
    let c2 = (eps1 * nf).round() as usize;
    let mut v_cols: Vec<SparseColumn> = Vec::new();
    for _ in 0..c2 {
        let col = sample_column(dist, n, &mut rng)?;
        let label = next_label;
        next_label += 1;
        if let Some(mapped) = to_core(&col, &row_pos) {
            if basis.contains(&mapped) {
                trace.v.push(label);
                v_cols.push(mapped);
            }
        }
        trace.second_round.push(col);
    }
    trace.eps2 = trace.v.len() as f64 / nf;
    let nv = v_cols.len();

    // Tails y' - A* B x'.
    let v_sparse = SparseMatrix::from_columns(&field, n_core_rows, v_cols.clone())?;
    let v_dense = v_sparse.to_dense();
    let all_v: Vec<usize> = (0..nv).collect();
    let x = v_dense.select(&a_dd_rows, &all_v);
    let y = v_dense.select(&a_star_rows, &all_v);
    let bx = b.mul(&x);
    let predicted = a_star.mul(&bx);
    trace.diagnostics.residual_violations = (0..nv)
        .filter(|&j| predicted.column(j) != y.column(j))
        .count();

    // Contraction of U \ [r].
    let mut a5 = a3.clone();
    for (label, col) in trace.v.iter().zip(&v_cols) {
        a5.push_column(*label, col.clone())?;
    }
    let contracted = contract_rep(&a5, &trace.u[r..])?;
    let dense6 = contracted.to_dense();
    // The contraction has rank r; a row basis represents the same matroid.
    let basis_rows = rref(&dense6.transpose()).pivot_columns;
    trace.a6 = contracted.select_rows(&basis_rows);
    trace.diagnostics.a6_rows = basis_rows.len();
    let a6_dense = trace.a6.to_dense();
    trace.diagnostics.a6_rank = rank(&a6_dense);

    let mut formula = DenseMatrix::zeros(&field, r, r + nv);
    for i in 0..r {
        formula.set(i, i, 1);
        for j in 0..nv {
            formula.set(i, r + j, bx.get(i, j));
        }
    }
    trace.diagnostics.a6_matches_formula = a6_dense.n_rows() == r && {
        let t = a6_dense.select(&first_r, &first_r);
        t.mul(&formula) == a6_dense
    };
    trace.a6_formula = formula;

    // Row combinations of B^[r] and the alpha-subgraphs they induce.
    let hyper = hypergraph_of_matrix(&trace.a3.select_columns(&(0..n1).collect::<Vec<_>>()))
        .map_err(|_| MinorError::CoreEmpty)?;
    let threshold = params.delta * n_prime as f64;
    for (j, alpha) in combos(&field, r, params.max_j) {
        let w = combine_rows(&b, &j, &alpha);
        let weight = w.iter().filter(|&&x| x != 0).count();
        let frac = weight as f64 / n_prime as f64;
        let d = &mut trace.diagnostics;
        d.combos_checked += 1;
        if (weight as f64) < threshold {
            d.light_combos += 1;
        }
        d.min_combo_weight = Some(d.min_combo_weight.map_or(frac, |m: f64| m.min(frac)));
        let sub = alpha_subgraph(&hyper, &b, &a_dd_rows, &j, &alpha)
            .map_err(|e| MinorError::BadParameter(e.to_string()))?;
        d.degree_one_exceptions += sub.degree_one_outside_j().len();
    }

    trace.b = b;
    trace.b_r = b_r.clone();
    trace.dense_basis = dense_basis(&b_r, params.delta);

    if let Some(db) = &trace.dense_basis {
        let present: HashSet<Vec<u8>> = (r..r + nv).map(|j| trace.a6_formula.column(j)).collect();
        let k = dist.k().min(r);
        let mut sets_hit: HashSet<Vec<usize>> = HashSet::new();
        let mut sets: HashSet<Vec<usize>> = HashSet::new();
        for (j, alpha) in combos(&field, r, k) {
            let mut v = vec![0u8; r];
            for (&jj, &a) in j.iter().zip(&alpha) {
                for (vi, &ui) in v.iter_mut().zip(&db.vectors[jj]) {
                    *vi = field.add(*vi, field.mul(a, ui));
                }
            }
            let d = &mut trace.diagnostics;
            d.s_total += 1;
            if present.contains(&v) {
                d.s_hits += 1;
                if j.len() == k {
                    sets_hit.insert(j.clone());
                }
            }
            if j.len() == k {
                sets.insert(j);
            }
        }
        trace.diagnostics.s_sets = sets.len();
        trace.diagnostics.s_sets_hit = sets_hit.len();
    }

    trace.failure = if c2 > 0 && nv == 0 {
        Some(PipelineFailure::VEmpty)
    } else if trace.dense_basis.is_none() {
        Some(PipelineFailure::NoDenseBasis)
    } else {
        None
    };
    Ok(trace)
}
