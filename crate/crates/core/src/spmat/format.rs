use std::fmt::Write as _;

use super::sparse::{SparseColumn, SparseMatrix};
use super::MatrixError;
use crate::gf::Field;

/// Upper bound on the declared row count accepted by the parser.
pub const MAX_ROWS: usize = 1 << 20;

const MAGIC: &str = "matroidphase-mat";

/// Serializes a matrix in the `matroidphase-mat v1` text format.
pub fn write_matrix(m: &SparseMatrix) -> String {
    let f = m.field();
    let mut s = format!(
        "{MAGIC} v1 q={} p={} e={} rows={} cols={}\n",
        f.order(),
        f.p(),
        f.e(),
        m.n_rows(),
        m.n_cols()
    );
    for col in m.columns() {
        let mut first = true;
        for &(i, v) in col {
            if !first {
                s.push(' ');
            }
            first = false;
            write!(s, "{}:{}", i + 1, v).expect("writing to a string");
        }
        s.push('\n');
    }
    s
}

fn bad(line: usize, msg: impl Into<String>) -> MatrixError {
    MatrixError::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_value(tok: Option<&str>, key: &str) -> Result<u64, MatrixError> {
    let tok = tok.ok_or_else(|| bad(1, format!("missing {key}=")))?;
    let rest = tok
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| bad(1, format!("expected {key}=<n>, got {tok:?}")))?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(1, format!("bad number in {tok:?}")));
    }
    rest.parse()
        .map_err(|_| bad(1, format!("number out of range in {tok:?}")))
}

/// Parses the `matroidphase-mat v1` text format. Labels become `0..cols`.
pub fn parse_matrix(text: &str) -> Result<SparseMatrix, MatrixError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or("");
    let mut toks = header.split(' ');
    if toks.next() != Some(MAGIC) || toks.next() != Some("v1") {
        return Err(bad(1, "expected header 'matroidphase-mat v1'"));
    }
    let q = header_value(toks.next(), "q")?;
    let p = header_value(toks.next(), "p")?;
    let e = header_value(toks.next(), "e")?;
    let rows = header_value(toks.next(), "rows")?;
    let cols = header_value(toks.next(), "cols")?;
    if toks.next().is_some() {
        return Err(bad(1, "trailing tokens in header"));
    }
    if p > 256 || e > 8 {
        return Err(bad(1, format!("unsupported field p={p} e={e}")));
    }
    let field = Field::new(p as u32, e as u32).map_err(MatrixError::Field)?;
    if field.order() as u64 != q {
        return Err(bad(1, format!("q={q} does not equal p^e={}", field.order())));
    }
    let n_rows = rows as usize;
    if rows > MAX_ROWS as u64 {
        return Err(MatrixError::TooLarge { rows });
    }
    let col_lines: Vec<&str> = lines.collect();
    if col_lines.len() as u64 != cols {
        return Err(bad(
            1,
            format!("header declares {cols} columns, found {} lines", col_lines.len()),
        ));
    }
    let mut m = SparseMatrix::new(&field, n_rows);
    for (j, line) in col_lines.iter().enumerate() {
        let lineno = j + 2;
        let mut col: SparseColumn = Vec::new();
        if !line.is_empty() {
            for item in line.split(' ') {
                let (r, v) = item
                    .split_once(':')
                    .ok_or_else(|| bad(lineno, format!("expected row:val, got {item:?}")))?;
                let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
                if !all_digits(r) || !all_digits(v) {
                    return Err(bad(lineno, format!("bad entry {item:?}")));
                }
                let r: usize = r
                    .parse()
                    .map_err(|_| bad(lineno, format!("row out of range in {item:?}")))?;
                let v: u32 = v
                    .parse()
                    .map_err(|_| bad(lineno, format!("value out of range in {item:?}")))?;
                if r == 0 || r > n_rows {
                    return Err(bad(lineno, format!("row {r} outside 1..={n_rows}")));
                }
                if v == 0 || v >= field.order() {
                    return Err(bad(
                        lineno,
                        format!("value {v} outside 1..{}", field.order()),
                    ));
                }
                if col.last().is_some_and(|&(prev, _)| prev >= r - 1) {
                    return Err(bad(lineno, "row indices must be strictly increasing"));
                }
                col.push((r - 1, v as u8));
            }
        }
        m.push_unchecked(j, col);
    }
    Ok(m)
}

impl SparseMatrix {
    /// Checks the process-matrix shape: every column has exactly `k` nonzeros.
    pub fn check_uniform_weight(&self, k: usize) -> Result<(), MatrixError> {
        for (j, c) in self.columns().iter().enumerate() {
            if c.len() != k {
                return Err(MatrixError::WrongWeight {
                    label: self.label(j),
                    weight: c.len(),
                    k,
                });
            }
        }
        Ok(())
    }
}
