//! Matrix and vector value types, unit-diagonal normalization, and residual
//! measurement.
//!
//! All values here are immutable after construction and safe to share across
//! workers. Dense storage is row-major with 8-byte IEEE-754 doubles; sparse
//! storage is compressed-row with the diagonal always stored explicitly.

use thiserror::Error;

/// Error type for matrix construction and matrix-level operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    /// Dimension was zero.
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    /// Value buffer length does not match the declared dimension.
    #[error("expected {expected} values for dimension {n}, got {got}")]
    WrongLength { n: usize, expected: usize, got: usize },
    /// A NaN or infinite entry was rejected.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    /// Generator density outside (0, 1].
    #[error("density must be in (0, 1], got {0}")]
    InvalidDensity(f64),
    /// Dense generation called with a partial density.
    #[error("dense generation requires density = 1, got {0}")]
    DenseRequiresFullDensity(f64),
    /// Compressed-row arrays are inconsistent.
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    /// Matrix Market input could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Zero diagonal entry where a divisor is required.
    #[error("zero diagonal entry at row {row}")]
    SingularDiagonal { row: usize },
    /// Operand dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    /// Builds an `n`x`n` matrix from row-major values.
    ///
    /// Rejects a zero dimension, a wrong-length buffer, and non-finite
    /// entries.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, MatrixError> {
        if n == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        if values.len() != n * n {
            return Err(MatrixError::WrongLength {
                n,
                expected: n * n,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: pos / n,
                col: pos % n,
            });
        }
        Ok(DenseMatrix { n, values })
    }

    /// Wraps values the library computed itself; skips validation.
    pub(crate) fn from_raw(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        DenseMatrix { n, values }
    }

    /// Identity matrix of dimension `n` (panics on `n = 0`).
    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "identity requires n >= 1");
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        DenseMatrix { n, values }
    }

    /// Builds a matrix from row slices; panics if the rows are ragged.
    /// Intended for literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(n >= 1, "from_rows requires at least one row");
        let mut values = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "from_rows requires square input");
            values.extend_from_slice(row);
        }
        DenseMatrix::new(n, values).expect("finite literal rows")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n..(row + 1) * self.n]
    }

    /// Infinity norm: the maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Matrix-vector product `A * x`.
    pub fn mul_vec(&self, x: &Vector) -> Result<Vector, MatrixError> {
        if x.n() != self.n {
            return Err(MatrixError::DimensionMismatch(format!(
                "matrix is {}x{} but vector has length {}",
                self.n,
                self.n,
                x.n()
            )));
        }
        let values = (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.values())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(Vector::from_raw(values))
    }

    /// Compressed-row view of the nonzero entries plus an explicit diagonal.
    ///
    /// The diagonal is stored even when it is zero so the result satisfies
    /// the [`SparseMatrix`] structure invariants.
    pub fn sparsify(&self) -> SparseMatrix {
        let mut row_offsets = Vec::with_capacity(self.n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 || j == i {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        SparseMatrix {
            n: self.n,
            row_offsets,
            col_indices,
            values,
        }
    }
}

/// Square sparse matrix in compressed-row form.
///
/// Every row stores its diagonal entry explicitly, and column indices are
/// strictly increasing within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a compressed-row matrix after validating the structure
    /// invariants.
    pub fn new(
        n: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, MatrixError> {
        if n == 0 {
            return Err(MatrixError::EmptyDimension);
        }
        if row_offsets.len() != n + 1 {
            return Err(MatrixError::InvalidStructure(format!(
                "row_offsets must have {} entries, got {}",
                n + 1,
                row_offsets.len()
            )));
        }
        if row_offsets[0] != 0 {
            return Err(MatrixError::InvalidStructure(
                "row_offsets must start at 0".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(MatrixError::InvalidStructure(format!(
                "{} column indices but {} values",
                col_indices.len(),
                values.len()
            )));
        }
        if row_offsets[n] != values.len() {
            return Err(MatrixError::InvalidStructure(format!(
                "row_offsets end at {} but {} entries are stored",
                row_offsets[n],
                values.len()
            )));
        }
        for i in 0..n {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(MatrixError::InvalidStructure(format!(
                    "row_offsets decrease at row {i}"
                )));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if !cols.windows(2).all(|w| w[0] < w[1]) {
                return Err(MatrixError::InvalidStructure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if cols.iter().any(|&c| c >= n) {
                return Err(MatrixError::InvalidStructure(format!(
                    "column index out of range in row {i}"
                )));
            }
            if !cols.contains(&i) {
                return Err(MatrixError::InvalidStructure(format!(
                    "row {i} does not store its diagonal entry"
                )));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let row = match row_offsets.binary_search(&pos) {
                Ok(mut r) => {
                    // offsets can repeat on empty rows; find the row that
                    // actually contains the entry
                    while row_offsets[r + 1] == pos {
                        r += 1;
                    }
                    r
                }
                Err(r) => r - 1,
            };
            return Err(MatrixError::NonFinite {
                row,
                col: col_indices[pos],
            });
        }
        Ok(SparseMatrix {
            n,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored for one row.
    pub fn row_entries(&self, row: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[row]..self.row_offsets[row + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Expands to dense storage; unstored entries become exactly 0.0.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut values = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row_entries(i);
            for (&j, &v) in cols.iter().zip(vals) {
                values[i * self.n + j] = v;
            }
        }
        DenseMatrix {
            n: self.n,
            values,
        }
    }
}

/// Column vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    values: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self, MatrixError> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite { row: pos, col: 0 });
        }
        Ok(Vector { values })
    }

    /// Wraps values the library computed itself; skips the finite check.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Vector { values }
    }

    pub fn ones(n: usize) -> Self {
        Vector { values: vec![1.0; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Vector { values: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Per-row scale factors recorded by [`normalize_unit_diagonal`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowScaling {
    scales: Vec<f64>,
}

impl RowScaling {
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Applies the row scaling to a right-hand side so that the scaled
    /// system has the same solution as the original one.
    pub fn apply(&self, v: &Vector) -> Result<Vector, MatrixError> {
        if v.n() != self.scales.len() {
            return Err(MatrixError::DimensionMismatch(format!(
                "scaling has {} rows but vector has length {}",
                self.scales.len(),
                v.n()
            )));
        }
        Ok(Vector::from_raw(
            self.scales
                .iter()
                .zip(v.values())
                .map(|(s, b)| s * b)
                .collect(),
        ))
    }
}

/// Divides every row by its diagonal entry so the diagonal becomes exactly
/// 1.0, returning the scaled matrix and the per-row factors `1 / a_ii`.
///
/// Diagonal dominance is preserved. Fails on a zero diagonal entry, naming
/// the offending row.
pub fn normalize_unit_diagonal(a: &DenseMatrix) -> Result<(DenseMatrix, RowScaling), MatrixError> {
    let n = a.n();
    let mut values = Vec::with_capacity(n * n);
    let mut scales = Vec::with_capacity(n);
    for i in 0..n {
        let d = a.get(i, i);
        if d == 0.0 {
            return Err(MatrixError::SingularDiagonal { row: i });
        }
        values.extend(a.row(i).iter().map(|v| v / d));
        values[i * n + i] = 1.0;
        scales.push(1.0 / d);
    }
    Ok((DenseMatrix { n, values }, RowScaling { scales }))
}

/// Maximum absolute component of `A*x - b`.
pub fn residual_inf(a: &DenseMatrix, x: &Vector, b: &Vector) -> Result<f64, MatrixError> {
    if x.n() != a.n() || b.n() != a.n() {
        return Err(MatrixError::DimensionMismatch(format!(
            "matrix is {}x{} but x has length {} and b has length {}",
            a.n(),
            a.n(),
            x.n(),
            b.n()
        )));
    }
    let ax = a.mul_vec(x)?;
    Ok(ax
        .values()
        .iter()
        .zip(b.values())
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max))
}
