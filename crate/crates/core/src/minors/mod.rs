//! Minor finding for represented matroids.
//!
//! Targets are fixed simple matroids given by a representation. A [`MinorWitness`]
//! names the contracted and deleted columns of the host and matches the survivors to
//! the target's columns; [`verify_witness`] replays it with exact arithmetic.

mod brute;
mod complete;
mod pipeline;
mod random;
mod target;
mod witness;

pub use brute::{minor_bruteforce, BRUTE_FORCE_MAX_COLUMNS};
pub use complete::{
    complete_matrix, dense_basis, is_complete, missing_complete_vector, n_schedule,
    pg_from_3complete, step_up, DenseBasis, PgResult, StepUpResult,
};
pub use pipeline::{
    pipeline_run, PipelineDiagnostics, PipelineFailure, PipelineParams, PipelineTrace,
};
pub use random::{minor_randomized, NotFoundReason, RandomizedOutcome};
pub use target::{TargetMinor, TargetSpec};
pub use witness::{projective_scalars, verify_witness, MinorWitness};

use thiserror::Error;

use crate::spmat::MatrixError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinorError {
    #[error("instance has {cols} columns, brute force is capped at {cap}")]
    TooLarge { cols: usize, cap: usize },
    #[error("target lives over GF({expected}) but the matrix is over GF({found})")]
    FieldMismatch { expected: u32, found: u32 },
    #[error("target is not simple")]
    NotSimple,
    #[error("target has no circuit")]
    NoCircuit,
    #[error("bad target: {0}")]
    BadTarget(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("matrix is not {ell}-complete: no column parallel to {missing:?}")]
    NotComplete { ell: usize, missing: Vec<u8> },
    #[error("rank {have} is below the required {need}")]
    InsufficientRank { have: u128, need: u128 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("the 2-core is empty")]
    CoreEmpty,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Process(#[from] crate::process::ProcessError),
}

/// Rank of the columns selected by `mask` among `cols`, all of length `dim`.
pub(crate) fn rank_of_mask(
    field: &crate::gf::Field,
    dim: usize,
    cols: &[Vec<u8>],
    mask: u64,
) -> usize {
    let mut basis = crate::spmat::IncrementalBasis::new(field, dim);
    let mut r = 0;
    for (i, c) in cols.iter().enumerate() {
        if mask >> i & 1 == 1 {
            let sparse: Vec<(usize, u8)> = c
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0)
                .map(|(k, &v)| (k, v))
                .collect();
            if basis.insert(&sparse) {
                r += 1;
            }
        }
    }
    r
}
