//! Dense direct solver for the small per-agent linear systems (state spaces
//! here are tabular, so n stays in the tens).

use crate::error::{Error, Result};
use crate::scalar::Float;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `n x n` and is consumed as scratch space along with `b`.
pub fn solve_dense<F: Float>(mut a: Vec<F>, mut b: Vec<F>, context: &str) -> Result<Vec<F>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix/vector size mismatch");

    // Pivot threshold scaled by the largest entry so near-singular systems
    // are reported instead of amplified.
    let mut scale = F::zero();
    for &v in &a {
        scale = scale.max(v.abs());
    }
    let tiny = scale.max(F::one()) * F::from_f64(1e-14);

    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() <= tiny {
            return Err(Error::SingularSystem {
                context: context.to_string(),
            });
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let inv = F::one() / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == F::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[row * n + k] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }

    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Max-norm residual `||A x - b||_inf`.
pub fn residual_inf<F: Float>(a: &[F], x: &[F], b: &[F]) -> F {
    let n = b.len();
    let mut worst = F::zero();
    for row in 0..n {
        let mut acc = -b[row];
        for k in 0..n {
            acc += a[row * n + k] * x[k];
        }
        worst = worst.max(acc.abs());
    }
    worst
}
