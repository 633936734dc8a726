//! Seeded generators for strictly diagonally dominant test systems.
//!
//! Off-diagonal entries are drawn uniformly from [-1, 1] and the diagonal is
//! set to the absolute row sum plus one, so every generated matrix satisfies
//! `|a_ii| > sum_{j != i} |a_ij|` and factorizes without pivoting. Output is
//! a pure function of `(n, kind, density, seed)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{DenseMatrix, MatrixError, SparseMatrix};

/// Storage kind requested from [`generate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Dense,
    Sparse,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixKind::Dense => f.write_str("dense"),
            MatrixKind::Sparse => f.write_str("sparse"),
        }
    }
}

impl FromStr for MatrixKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" => Ok(MatrixKind::Dense),
            "sparse" => Ok(MatrixKind::Sparse),
            other => Err(format!("unknown matrix kind `{other}` (dense|sparse)")),
        }
    }
}

/// A generated matrix in the storage form that was requested.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratedMatrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl GeneratedMatrix {
    pub fn n(&self) -> usize {
        match self {
            GeneratedMatrix::Dense(m) => m.n(),
            GeneratedMatrix::Sparse(m) => m.n(),
        }
    }

    /// Densifies sparse output; dense output is returned as-is.
    pub fn into_dense(self) -> DenseMatrix {
        match self {
            GeneratedMatrix::Dense(m) => m,
            GeneratedMatrix::Sparse(m) => m.to_dense(),
        }
    }
}

/// Generates a strictly diagonally dominant matrix, deterministically in
/// `(n, kind, density, seed)`.
///
/// Sparse output stores `ceil(density * (n - 1))` off-diagonal entries per
/// row plus the diagonal. Dense output requires `density = 1`.
pub fn generate(
    n: usize,
    kind: MatrixKind,
    density: f64,
    seed: u64,
) -> Result<GeneratedMatrix, MatrixError> {
    if n == 0 {
        return Err(MatrixError::EmptyDimension);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(MatrixError::InvalidDensity(density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        MatrixKind::Dense => {
            if density != 1.0 {
                return Err(MatrixError::DenseRequiresFullDensity(density));
            }
            Ok(GeneratedMatrix::Dense(generate_dense(n, &mut rng)))
        }
        MatrixKind::Sparse => Ok(GeneratedMatrix::Sparse(generate_sparse(
            n, density, &mut rng,
        ))),
    }
}

fn generate_dense(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let mut abs_sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let v: f64 = rng.gen_range(-1.0..=1.0);
            values[i * n + j] = v;
            abs_sum += v.abs();
        }
        values[i * n + i] = abs_sum + 1.0;
    }
    DenseMatrix::new(n, values).expect("generated entries are finite")
}

fn generate_sparse(n: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
    let per_row = (density * (n - 1) as f64).ceil() as usize;
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    row_offsets.push(0);
    for i in 0..n {
        // pick distinct off-diagonal columns, then draw values in column
        // order so the layout is reproducible
        let mut cols: Vec<usize> = rand::seq::index::sample(rng, n - 1, per_row)
            .into_iter()
            .map(|idx| if idx < i { idx } else { idx + 1 })
            .collect();
        cols.sort_unstable();
        let row: Vec<(usize, f64)> = cols
            .into_iter()
            .map(|j| (j, rng.gen_range(-1.0..=1.0)))
            .collect();
        let abs_sum: f64 = row.iter().map(|(_, v)| v.abs()).sum();
        let diag = abs_sum + 1.0;
        let mut placed_diag = false;
        for (j, v) in row {
            if !placed_diag && j > i {
                col_indices.push(i);
                values.push(diag);
                placed_diag = true;
            }
            col_indices.push(j);
            values.push(v);
        }
        if !placed_diag {
            col_indices.push(i);
            values.push(diag);
        }
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::new(n, row_offsets, col_indices, values)
        .expect("generated rows satisfy the sparse invariants")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dominance_gap(m: &DenseMatrix) -> f64 {
        let n = m.n();
        (0..n)
            .map(|i| {
                let off: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| m.get(i, j).abs())
                    .sum();
                m.get(i, i).abs() - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn one_by_one_dense_is_unit_diagonal() {
        let m = generate(1, MatrixKind::Dense, 1.0, 7).unwrap().into_dense();
        assert_eq!(m.values(), &[1.0]);
    }

    #[test]
    fn dense_generation_is_deterministic() {
        let a = generate(64, MatrixKind::Dense, 1.0, 42).unwrap();
        let b = generate(64, MatrixKind::Dense, 1.0, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_rows_are_dominant() {
        // row-sum scan over the generated output
        let m = match generate(64, MatrixKind::Sparse, 0.1, 42).unwrap() {
            GeneratedMatrix::Sparse(m) => m,
            _ => unreachable!(),
        };
        for i in 0..64 {
            let (cols, vals) = m.row_entries(i);
            let mut diag = 0.0;
            let mut off = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v.abs();
                } else {
                    off += v.abs();
                }
            }
            assert!(diag > off, "row {i} not dominant");
        }
    }

    #[test]
    fn dense_rows_are_dominant() {
        let m = generate(33, MatrixKind::Dense, 1.0, 3).unwrap().into_dense();
        assert!(dominance_gap(&m) > 0.0);
    }

    #[test]
    fn sparse_row_population_matches_density() {
        let m = match generate(50, MatrixKind::Sparse, 0.2, 9).unwrap() {
            GeneratedMatrix::Sparse(m) => m,
            _ => unreachable!(),
        };
        let per_row = (0.2f64 * 49.0).ceil() as usize;
        for i in 0..50 {
            let (cols, _) = m.row_entries(i);
            assert_eq!(cols.len(), per_row + 1);
            assert!(cols.contains(&i));
        }
    }

    #[test]
    fn rejects_bad_density() {
        assert!(matches!(
            generate(4, MatrixKind::Sparse, 0.0, 1),
            Err(MatrixError::InvalidDensity(_))
        ));
        assert!(matches!(
            generate(4, MatrixKind::Sparse, 1.5, 1),
            Err(MatrixError::InvalidDensity(_))
        ));
        assert!(matches!(
            generate(4, MatrixKind::Dense, 0.5, 1),
            Err(MatrixError::DenseRequiresFullDensity(_))
        ));
    }
}
