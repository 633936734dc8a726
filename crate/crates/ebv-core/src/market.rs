//! Matrix Market ingestion.
//!
//! Accepts the coordinate real general flavor only:
//!
//! ```text
//! %%MatrixMarket matrix coordinate real general
//! % comment lines
//! rows cols nnz
//! i j value        (1-based indices)
//! ```
//!
//! Duplicate `(i, j)` entries are summed. Rows that do not store a diagonal
//! entry get an explicit 0.0 diagonal so the result satisfies the
//! [`SparseMatrix`] structure invariants. Parse failures name the offending
//! line.

use crate::matrix::{MatrixError, SparseMatrix};

const HEADER: [&str; 5] = ["%%matrixmarket", "matrix", "coordinate", "real", "general"];

fn parse_err(line: usize, message: impl Into<String>) -> MatrixError {
    MatrixError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses Matrix Market coordinate text into a [`SparseMatrix`].
pub fn load_matrix_market(text: &str) -> Result<SparseMatrix, MatrixError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, banner) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input, expected Matrix Market banner"))?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if tokens != HEADER {
        return Err(parse_err(
            1,
            format!(
                "expected banner `%%MatrixMarket matrix coordinate real general`, got `{banner}`"
            ),
        ));
    }

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim_start();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size_text) = data
        .next()
        .ok_or_else(|| parse_err(1, "missing size line `rows cols nnz`"))?;
    let dims: Vec<usize> = size_text
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(size_line, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(parse_err(
            size_line,
            format!("size line must have 3 fields, got {}", dims.len()),
        ));
    };
    if rows != cols {
        return Err(parse_err(
            size_line,
            format!("matrix must be square, got {rows}x{cols}"),
        ));
    }
    if rows == 0 {
        return Err(parse_err(size_line, "dimension must be at least 1"));
    }
    let n = rows;

    let mut triples: Vec<(usize, usize, f64)> = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (line, entry) = data.next().ok_or_else(|| {
            parse_err(
                size_line,
                format!("expected {nnz} entries, found {}", triples.len()),
            )
        })?;
        let fields: Vec<&str> = entry.split_whitespace().collect();
        let [i_text, j_text, v_text] = fields[..] else {
            return Err(parse_err(
                line,
                format!("entry must have 3 fields, got {}", fields.len()),
            ));
        };
        let i: usize = i_text
            .parse()
            .map_err(|e| parse_err(line, format!("bad row index: {e}")))?;
        let j: usize = j_text
            .parse()
            .map_err(|e| parse_err(line, format!("bad column index: {e}")))?;
        let v: f64 = v_text
            .parse()
            .map_err(|e| parse_err(line, format!("bad value: {e}")))?;
        if i < 1 || i > n || j < 1 || j > n {
            return Err(parse_err(
                line,
                format!("index ({i}, {j}) out of range for a {n}x{n} matrix"),
            ));
        }
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value `{v_text}`")));
        }
        triples.push((i - 1, j - 1, v));
    }
    if let Some((line, _)) = data.next() {
        return Err(parse_err(line, "unexpected data after declared entries"));
    }

    Ok(assemble(n, triples))
}

/// Sorts triples row-major, sums duplicates, and inserts missing diagonals.
fn assemble(n: usize, mut triples: Vec<(usize, usize, f64)>) -> SparseMatrix {
    // stable sort keeps duplicate entries in file order, so their sum is
    // deterministic
    triples.sort_by_key(|&(i, j, _)| (i, j));
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices: Vec<usize> = Vec::with_capacity(triples.len());
    let mut values: Vec<f64> = Vec::with_capacity(triples.len());
    row_offsets.push(0);
    let mut idx = 0;
    for row in 0..n {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        while idx < triples.len() && triples[idx].0 == row {
            let col = triples[idx].1;
            let mut sum = 0.0;
            while idx < triples.len() && triples[idx].0 == row && triples[idx].1 == col {
                sum += triples[idx].2;
                idx += 1;
            }
            entries.push((col, sum));
        }
        if !entries.iter().any(|&(c, _)| c == row) {
            let pos = entries.partition_point(|&(c, _)| c < row);
            entries.insert(pos, (row, 0.0));
        }
        for (c, v) in entries {
            col_indices.push(c);
            values.push(v);
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::new(n, row_offsets, col_indices, values)
        .expect("assembled rows are sorted and store explicit diagonals")
}
