use std::path::PathBuf;
use std::str::FromStr;

use super::MinorError;
use crate::gf::Field;
use crate::spmat::{simplify, SparseColumn, SparseMatrix};

/// Largest projective geometry accepted as a target, in points.
const MAX_PG_POINTS: u64 = 1 << 16;

/// A fixed simple matroid to look for.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetMinor {
    /// PG(t-1, q), the rank-t projective geometry.
    Pg { t: usize, q: u32 },
    U23,
    Explicit(SparseMatrix),
}

impl TargetMinor {
    pub fn pg(t: usize, q: u32) -> Result<Self, MinorError> {
        if t < 2 {
            return Err(MinorError::BadTarget(format!("PG needs rank t >= 2, got {t}")));
        }
        Field::with_order(q).map_err(|e| MinorError::BadTarget(e.to_string()))?;
        let points = pg_points(t, q as u64)
            .ok_or_else(|| MinorError::BadTarget(format!("PG({}, {q}) is too large", t - 1)))?;
        if points > MAX_PG_POINTS {
            return Err(MinorError::BadTarget(format!(
                "PG({}, {q}) has {points} points, the cap is {MAX_PG_POINTS}",
                t - 1
            )));
        }
        Ok(TargetMinor::Pg { t, q })
    }

    /// Accepts a representation of a simple matroid with a circuit.
    pub fn explicit(m: SparseMatrix) -> Result<Self, MinorError> {
        if simplify(&m).n_cols() != m.n_cols() {
            return Err(MinorError::NotSimple);
        }
        if m.rank() >= m.n_cols() {
            return Err(MinorError::NoCircuit);
        }
        Ok(TargetMinor::Explicit(m))
    }

    /// A representation over `field`, which must match the target's field.
    pub fn representation(&self, field: &Field) -> Result<SparseMatrix, MinorError> {
        match self {
            TargetMinor::Pg { t, q } => {
                if *q != field.order() {
                    return Err(MinorError::FieldMismatch {
                        expected: *q,
                        found: field.order(),
                    });
                }
                Ok(pg_representation(field, *t))
            }
            TargetMinor::U23 => {
                let cols = vec![vec![(0, 1)], vec![(1, 1)], vec![(0, 1), (1, 1)]];
                Ok(SparseMatrix::from_columns(field, 2, cols)?)
            }
            TargetMinor::Explicit(m) => {
                if m.field().order() != field.order() {
                    return Err(MinorError::FieldMismatch {
                        expected: m.field().order(),
                        found: field.order(),
                    });
                }
                Ok(m.clone())
            }
        }
    }

    /// Does the target have a coloop? Hosts may then not be restricted to their 2-core.
    pub fn has_coloop(&self) -> bool {
        match self {
            TargetMinor::Pg { .. } | TargetMinor::U23 => false,
            TargetMinor::Explicit(m) => {
                let r = m.rank();
                (0..m.n_cols()).any(|j| {
                    let rest: Vec<usize> = (0..m.n_cols()).filter(|&i| i != j).collect();
                    m.rank_of(&rest) < r
                })
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            TargetMinor::Pg { t, q } => format!("PG({},{q})", t - 1),
            TargetMinor::U23 => "U(2,3)".to_string(),
            TargetMinor::Explicit(m) => format!("explicit({}x{})", m.n_rows(), m.n_cols()),
        }
    }
}

fn pg_points(t: usize, q: u64) -> Option<u64> {
    let qt = q.checked_pow(u32::try_from(t).ok()?)?;
    Some((qt - 1) / (q - 1))
}

/// Normalized points of PG(t-1, q): every nonzero vector of F^t whose first nonzero
/// entry is 1, ordered by leading position and then lexicographically.
pub(crate) fn pg_representation(field: &Field, t: usize) -> SparseMatrix {
    let q = field.order() as usize;
    let mut cols: Vec<SparseColumn> = Vec::new();
    for lead in 0..t {
        let tail = t - lead - 1;
        for code in 0..q.pow(tail as u32) {
            let mut col = vec![(lead, 1u8)];
            let mut c = code;
            let mut digits = vec![0u8; tail];
            for d in digits.iter_mut().rev() {
                *d = (c % q) as u8;
                c /= q;
            }
            for (i, &d) in digits.iter().enumerate() {
                if d != 0 {
                    col.push((lead + 1 + i, d));
                }
            }
            cols.push(col);
        }
    }
    SparseMatrix::from_columns(field, t, cols).expect("valid PG columns")
}

/// A target as written on the command line: `pg:t:q`, `u23` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Pg { t: usize, q: u32 },
    U23,
    File(PathBuf),
}

impl FromStr for TargetSpec {
    type Err = MinorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "u23" {
            return Ok(TargetSpec::U23);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(MinorError::BadTarget("empty file path".into()));
            }
            return Ok(TargetSpec::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("pg:") {
            let (t, q) = rest
                .split_once(':')
                .ok_or_else(|| MinorError::BadTarget(format!("expected pg:t:q, got {s:?}")))?;
            let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
            if !digits(t) || !digits(q) {
                return Err(MinorError::BadTarget(format!("expected pg:t:q, got {s:?}")));
            }
            let t: usize = t
                .parse()
                .map_err(|_| MinorError::BadTarget(format!("rank out of range in {s:?}")))?;
            let q: u32 = q
                .parse()
                .map_err(|_| MinorError::BadTarget(format!("field order out of range in {s:?}")))?;
            TargetMinor::pg(t, q)?;
            return Ok(TargetSpec::Pg { t, q });
        }
        Err(MinorError::BadTarget(format!("unknown target {s:?}")))
    }
}

impl std::fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetSpec::Pg { t, q } => write!(f, "pg:{t}:{q}"),
            TargetSpec::U23 => f.write_str("u23"),
            TargetSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl TargetSpec {
    /// Resolves a non-file target; files are read by the caller.
    pub fn to_target(&self) -> Option<TargetMinor> {
        match self {
            TargetSpec::Pg { t, q } => Some(TargetMinor::Pg { t: *t, q: *q }),
            TargetSpec::U23 => Some(TargetMinor::U23),
            TargetSpec::File(_) => None,
        }
    }

    /// Like [`TargetSpec::to_target`], reading file targets from disk.
    pub fn resolve(&self) -> Result<TargetMinor, MinorError> {
        match self {
            TargetSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    MinorError::BadTarget(format!("cannot read {}: {e}", path.display()))
                })?;
                TargetMinor::explicit(crate::spmat::parse_matrix(&text)?)
            }
            other => Ok(other.to_target().expect("non-file target")),
        }
    }
}
