//! Dense Gaussian elimination over a [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pivots below this magnitude are treated as zero in float mode.
const FLOAT_PIVOT_EPS: f64 = 1e-12;

/// Solves `a * x = b` for square `a`.
///
/// Exact backends pivot on the first nonzero entry; float backends use
/// partial pivoting and reject solutions whose residual exceeds the float
/// tolerance.
pub fn solve<S: Scalar>(a: &[Vec<S>], b: &[S], context: &'static str) -> Result<Vec<S>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: a.len() });
    }
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();

    for col in 0..n {
        let pivot_row = if S::EXACT {
            (col..n).find(|&r| m[r][col] != S::zero())
        } else {
            (col..n)
                .max_by(|&x, &y| m[x][col].to_f64().abs().partial_cmp(&m[y][col].to_f64().abs()).unwrap())
                .filter(|&r| m[r][col].to_f64().abs() > FLOAT_PIVOT_EPS)
        };
        let Some(p) = pivot_row else {
            return Err(Error::Singular { context });
        };
        m.swap(col, p);
        let pivot = m[col][col].clone();
        for r in (col + 1)..n {
            if m[r][col] == S::zero() {
                continue;
            }
            let factor = m[r][col].clone() / pivot.clone();
            for c in col..=n {
                let delta = factor.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - delta;
            }
        }
    }

    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = m[row][n].clone();
        for c in (row + 1)..n {
            acc = acc - m[row][c].clone() * x[c].clone();
        }
        x[row] = acc / m[row][row].clone();
    }

    if !S::EXACT {
        for (row, rhs) in a.iter().zip(b) {
            let lhs: S = row.iter().zip(&x).map(|(c, v)| c.clone() * v.clone()).sum();
            if !lhs.tol_eq(rhs) {
                return Err(Error::Singular { context });
            }
        }
    }
    Ok(x)
}
