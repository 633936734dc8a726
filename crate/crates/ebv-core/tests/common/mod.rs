//! Shared helpers for the integration tests.

#![allow(dead_code)]

use ebv_core::{DenseMatrix, Vector};

/// Textbook dense Gaussian elimination with partial pivoting. This is the
/// brute-force oracle; it shares no code with the library's factorization
/// path.
pub fn gepp_solve(a: &DenseMatrix, b: &Vector) -> Vec<f64> {
    let n = a.n();
    let mut m = a.values().to_vec();
    let mut rhs = b.values().to_vec();
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
        assert!(m[col * n + col] != 0.0, "oracle hit a zero pivot");
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

/// Largest relative componentwise gap between two vectors.
pub fn max_relative_gap(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().map(|v| v.abs()).fold(1.0, f64::max);
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / scale)
        .fold(0.0, f64::max)
}
