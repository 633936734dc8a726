//! Sequential right-looking LU factorization and triangular substitutions.
//!
//! This is the deterministic reference the parallel executor reproduces
//! bitwise: elimination steps are applied in ascending order, so every
//! matrix entry sees a fixed sequence of floating-point operations
//! regardless of how the work is later distributed.
//!
//! Factors are stored in Doolittle form: the strict lower triangle holds the
//! multipliers (unit diagonal of L implicit), the diagonal and upper
//! triangle hold U with the pivots on the diagonal.

use thiserror::Error;

use crate::matrix::{DenseMatrix, Vector};

/// Error type for factorization and substitution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuError {
    /// Pivot magnitude at the 1-based elimination step fell at or below the
    /// policy threshold.
    #[error("singular pivot at elimination step {step}")]
    SingularPivot { step: usize },
    /// Operand dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Absolute pivot floor: factorization fails when `|pivot| <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotPolicy {
    threshold: f64,
}

impl PivotPolicy {
    /// Policy with an explicit absolute threshold (must be finite and
    /// nonnegative).
    pub fn absolute(threshold: f64) -> Self {
        assert!(
            threshold.is_finite() && threshold >= 0.0,
            "pivot threshold must be finite and nonnegative"
        );
        PivotPolicy { threshold }
    }

    /// Default floor `n * eps * ||A||_inf`, scaling with problem size and
    /// magnitude.
    pub fn default_for(a: &DenseMatrix) -> Self {
        PivotPolicy {
            threshold: a.n() as f64 * f64::EPSILON * a.inf_norm(),
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

/// Packed LU factors: one `n`x`n` buffer holding the strict lower triangle
/// of L and the full upper triangle of U.
#[derive(Debug, Clone, PartialEq)]
pub struct LUFactors {
    n: usize,
    packed: Vec<f64>,
}

impl LUFactors {
    /// Wraps a packed buffer; only the length is validated.
    pub fn from_packed(n: usize, packed: Vec<f64>) -> Result<Self, LuError> {
        if packed.len() != n * n {
            return Err(LuError::DimensionMismatch(format!(
                "packed buffer has {} values, expected {}",
                packed.len(),
                n * n
            )));
        }
        Ok(LUFactors { n, packed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    /// L multiplier at `(row, col)`, `row > col`.
    pub fn multiplier(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row > col);
        self.packed[row * self.n + col]
    }

    /// U entry at `(row, col)`, `row <= col`; the diagonal holds the pivots.
    pub fn upper(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row <= col);
        self.packed[row * self.n + col]
    }

    /// Pivot of elimination step `k` (0-based row index).
    pub fn pivot(&self, k: usize) -> f64 {
        self.packed[k * self.n + k]
    }

    /// U entry scaled by its row pivot, recovering the unit-diagonal form of
    /// the upper factor on demand.
    pub fn unit_upper(&self, row: usize, col: usize) -> f64 {
        self.upper(row, col) / self.pivot(row)
    }

    /// Expands `L * U`; used to gauge factorization backward error.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let m = i.min(j);
                let mut s: f64 = (0..m)
                    .map(|k| self.packed[i * n + k] * self.packed[k * n + j])
                    .sum();
                s += if i <= j {
                    // l_ii = 1
                    self.packed[i * n + j]
                } else {
                    self.packed[i * n + j] * self.packed[j * n + j]
                };
                out[i * n + j] = s;
            }
        }
        DenseMatrix::from_raw(n, out)
    }
}

/// Right-looking factorization: at step `r` the column multipliers
/// `l_ir = a_ir / a_rr` are formed, then the rank-1 update
/// `a_ij -= l_ir * a_rj` is applied to the trailing submatrix. Steps run in
/// ascending order and the result is packed in place.
pub fn factorize_seq(a: &DenseMatrix, policy: &PivotPolicy) -> Result<LUFactors, LuError> {
    let n = a.n();
    let mut packed = a.values().to_vec();
    for r in 0..n - 1 {
        let pivot = packed[r * n + r];
        if pivot.abs() <= policy.threshold() {
            return Err(LuError::SingularPivot { step: r + 1 });
        }
        let (head, trailing) = packed.split_at_mut((r + 1) * n);
        let pivot_row = &head[r * n + r + 1..];
        for row in trailing.chunks_exact_mut(n) {
            let l = row[r] / pivot;
            row[r] = l;
            for (dst, &u) in row[r + 1..].iter_mut().zip(pivot_row) {
                *dst -= l * u;
            }
        }
    }
    if packed[(n - 1) * n + (n - 1)].abs() <= policy.threshold() {
        return Err(LuError::SingularPivot { step: n });
    }
    Ok(LUFactors { n, packed })
}

/// Solves `L y = b` column by column (unit diagonal of L), so the work
/// attributable to L column `k` is exactly its sub-diagonal length.
pub fn forward_substitute(f: &LUFactors, b: &Vector) -> Result<Vector, LuError> {
    let mut madds = 0;
    forward_substitute_counting(f, b, &mut madds)
}

fn forward_substitute_counting(
    f: &LUFactors,
    b: &Vector,
    madds: &mut u64,
) -> Result<Vector, LuError> {
    let n = f.n;
    if b.n() != n {
        return Err(LuError::DimensionMismatch(format!(
            "factors are {}x{} but b has length {}",
            n,
            n,
            b.n()
        )));
    }
    let mut y = b.values().to_vec();
    for k in 0..n {
        let yk = y[k];
        for i in k + 1..n {
            y[i] -= f.packed[i * n + k] * yk;
            *madds += 1;
        }
    }
    Ok(Vector::from_raw(y))
}

/// Solves `U x = y` row by row: `x_k = (y_k - sum_{j>k} u_kj x_j) / u_kk`,
/// so the work attributable to U row `k` is its right-of-diagonal length
/// plus one division.
pub fn backward_substitute(f: &LUFactors, y: &Vector) -> Result<Vector, LuError> {
    let (mut madds, mut divs) = (0, 0);
    backward_substitute_counting(f, y, &mut madds, &mut divs)
}

fn backward_substitute_counting(
    f: &LUFactors,
    y: &Vector,
    madds: &mut u64,
    divs: &mut u64,
) -> Result<Vector, LuError> {
    let n = f.n;
    if y.n() != n {
        return Err(LuError::DimensionMismatch(format!(
            "factors are {}x{} but y has length {}",
            n,
            n,
            y.n()
        )));
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let pivot = f.packed[k * n + k];
        if pivot == 0.0 {
            return Err(LuError::SingularPivot { step: k + 1 });
        }
        let mut s = y[k];
        for j in k + 1..n {
            s -= f.packed[k * n + j] * x[j];
            *madds += 1;
        }
        x[k] = s / pivot;
        *divs += 1;
    }
    Ok(Vector::from_raw(x))
}

/// Factorizes and runs both substitutions.
pub fn solve_seq(a: &DenseMatrix, b: &Vector, policy: &PivotPolicy) -> Result<Vector, LuError> {
    if b.n() != a.n() {
        return Err(LuError::DimensionMismatch(format!(
            "matrix is {}x{} but b has length {}",
            a.n(),
            a.n(),
            b.n()
        )));
    }
    let f = factorize_seq(a, policy)?;
    let y = forward_substitute(&f, b)?;
    backward_substitute(&f, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, MatrixKind};
    use crate::matrix::residual_inf;

    #[test]
    fn identity_factors_to_identity() {
        let f = factorize_seq(&DenseMatrix::identity(4), &PivotPolicy::absolute(0.0)).unwrap();
        assert_eq!(f.packed(), DenseMatrix::identity(4).values());
    }

    #[test]
    fn hand_two_by_two() {
        let a = DenseMatrix::from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let f = factorize_seq(&a, &PivotPolicy::absolute(0.0)).unwrap();
        // multiplier 1/4, Schur complement 3 - 0.25 * 1
        assert_eq!(f.packed(), &[4.0, 1.0, 0.25, 2.75]);
    }

    #[test]
    fn zero_pivot_reports_first_step() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 1.0]]);
        let err = factorize_seq(&a, &PivotPolicy::absolute(0.0)).unwrap_err();
        assert_eq!(err, LuError::SingularPivot { step: 1 });
    }

    #[test]
    fn last_pivot_is_checked() {
        // elimination zeroes the (1,1) entry: [[1,1],[1,1]] -> Schur 0
        let a = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let err = factorize_seq(&a, &PivotPolicy::absolute(0.0)).unwrap_err();
        assert_eq!(err, LuError::SingularPivot { step: 2 });
    }

    #[test]
    fn forward_with_zero_lower_is_identity_map() {
        let f = LUFactors::from_packed(2, vec![4.0, 1.0, 0.0, 2.75]).unwrap();
        let b = Vector::new(vec![5.0, 10.0]).unwrap();
        assert_eq!(forward_substitute(&f, &b).unwrap().values(), b.values());
    }

    #[test]
    fn forward_hand_example() {
        let f = LUFactors::from_packed(2, vec![4.0, 1.0, 0.25, 2.75]).unwrap();
        let b = Vector::new(vec![5.0, 10.0]).unwrap();
        // 10 - 0.25 * 5
        assert_eq!(forward_substitute(&f, &b).unwrap().values(), &[5.0, 8.75]);
    }

    #[test]
    fn backward_with_identity_upper_is_identity_map() {
        let f = LUFactors::from_packed(2, vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        let y = Vector::new(vec![3.0, -2.0]).unwrap();
        assert_eq!(backward_substitute(&f, &y).unwrap().values(), &[3.0, -2.0]);
    }

    #[test]
    fn backward_hand_example() {
        let f = LUFactors::from_packed(2, vec![4.0, 1.0, 0.25, 2.75]).unwrap();
        let y = Vector::new(vec![5.0, 8.75]).unwrap();
        let x = backward_substitute(&f, &y).unwrap();
        let x1 = 8.75 / 2.75;
        assert_eq!(x[1], x1);
        assert_eq!(x[0], (5.0 - x1) / 4.0);
    }

    #[test]
    fn backward_rejects_zero_pivot() {
        let f = LUFactors::from_packed(2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let y = Vector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            backward_substitute(&f, &y).unwrap_err(),
            LuError::SingularPivot { step: 2 }
        );
    }

    #[test]
    fn solve_identity() {
        let b = Vector::new(vec![3.0, -2.0]).unwrap();
        let x = solve_seq(&DenseMatrix::identity(2), &b, &PivotPolicy::absolute(0.0)).unwrap();
        assert_eq!(x.values(), b.values());
    }

    #[test]
    fn solve_hand_example() {
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let b = Vector::new(vec![5.0, 10.0]).unwrap();
        let x = solve_seq(&a, &b, &PivotPolicy::absolute(0.0)).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-14);
        assert!((x[1] - 3.0).abs() <= 1e-14);
    }

    #[test]
    fn solve_generated_system_recovers_ones() {
        let a = generate(32, MatrixKind::Dense, 1.0, 11).unwrap().into_dense();
        let b = a.mul_vec(&Vector::ones(32)).unwrap();
        let x = solve_seq(&a, &b, &PivotPolicy::default_for(&a)).unwrap();
        for i in 0..32 {
            assert!((x[i] - 1.0).abs() <= 1e-10);
        }
        assert!(residual_inf(&a, &x, &b).unwrap() <= 1e-10 * a.inf_norm());
    }

    #[test]
    fn forward_matches_brute_force() {
        // expand the unit-lower system and solve it with Gaussian
        // elimination with partial pivoting, independent of the
        // substitution path
        let a = generate(5, MatrixKind::Dense, 1.0, 3).unwrap().into_dense();
        let f = factorize_seq(&a, &PivotPolicy::default_for(&a)).unwrap();
        let n = 5;
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            lower[i * n + i] = 1.0;
            for k in 0..i {
                lower[i * n + k] = f.multiplier(i, k);
            }
        }
        let b = vec![0.7, -1.3, 2.1, 0.0, -0.5];
        let oracle = gepp_solve(n, &lower, &b);
        let y = forward_substitute(&f, &Vector::new(b).unwrap()).unwrap();
        for i in 0..n {
            let scale = oracle[i].abs().max(1.0);
            assert!((y[i] - oracle[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn substitution_work_counts_are_exact() {
        let n = 17;
        let a = generate(n, MatrixKind::Dense, 1.0, 5).unwrap().into_dense();
        let f = factorize_seq(&a, &PivotPolicy::default_for(&a)).unwrap();
        let b = a.mul_vec(&Vector::ones(n)).unwrap();
        let mut fwd_madds = 0;
        let y = forward_substitute_counting(&f, &b, &mut fwd_madds).unwrap();
        let (mut bwd_madds, mut divs) = (0, 0);
        backward_substitute_counting(&f, &y, &mut bwd_madds, &mut divs).unwrap();
        let expected = (n * (n - 1) / 2) as u64;
        assert_eq!(fwd_madds, expected);
        assert_eq!(bwd_madds, expected);
        assert_eq!(divs, n as u64);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = LUFactors::from_packed(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Vector::new(vec![1.0]).unwrap();
        assert!(matches!(
            forward_substitute(&f, &b),
            Err(LuError::DimensionMismatch(_))
        ));
    }

    /// Gaussian elimination with partial pivoting, kept deliberately plain.
    fn gepp_solve(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut m = a.to_vec();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&p, &q| {
                    m[p * n + col]
                        .abs()
                        .partial_cmp(&m[q * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            if piv != col {
                for j in 0..n {
                    m.swap(col * n + j, piv * n + j);
                }
                rhs.swap(col, piv);
            }
            for row in col + 1..n {
                let factor = m[row * n + col] / m[col * n + col];
                for j in col..n {
                    m[row * n + j] -= factor * m[col * n + j];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut s = rhs[row];
            for j in row + 1..n {
                s -= m[row * n + j] * x[j];
            }
            x[row] = s / m[row * n + row];
        }
        x
    }
}
