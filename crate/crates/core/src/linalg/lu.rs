use super::Matrix;
use crate::error::{Error, Result};

/// Solves `A X = B` for square `A` by Gaussian elimination with partial
/// pivoting. Used for the Padé denominator of the matrix exponential, which
/// is not symmetric.
pub fn solve_general(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dims("LU solve (square)", a.rows(), a.cols()));
    }
    let n = a.rows();
    if b.rows() != n {
        return Err(Error::dims("LU solve right-hand side", n, b.rows()));
    }
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let threshold = 1e-300_f64.max(f64::EPSILON * a.max_abs() * 1e-3);

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, lu[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot_abs > threshold) {
            return Err(Error::SingularOperator {
                index: col,
                pivot: pivot_abs,
            });
        }
        if pivot_row != col {
            for j in 0..n {
                let t = lu[(col, j)];
                lu[(col, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = t;
            }
            for j in 0..m {
                let t = x[(col, j)];
                x[(col, j)] = x[(pivot_row, j)];
                x[(pivot_row, j)] = t;
            }
        }
        let pivot = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / pivot;
            if f == 0.0 {
                continue;
            }
            lu[(r, col)] = 0.0;
            for j in (col + 1)..n {
                lu[(r, j)] -= f * lu[(col, j)];
            }
            for j in 0..m {
                x[(r, j)] -= f * x[(col, j)];
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}
