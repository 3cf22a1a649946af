use alloc::vec::Vec;

use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Pivots smaller than this fraction of `max|a_ij|` are treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

/// `A = L D Lᵀ` with unit lower-triangular `L` and diagonal `D`, computed
/// without pivoting.
///
/// Gramian-type operators are symmetric positive (semi)definite; the
/// symmetric pivot-free form keeps the regularized `α(I − π_D)` part usable
/// where a Cholesky square root of a tiny pivot would lose accuracy.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    // Strict lower triangle of L, row-major n × n; the diagonal is implicit.
    lower: Matrix,
    diag: Vec<f64>,
}

impl Ldlt {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("LDLᵀ factorization (square)", a.rows(), a.cols()));
        }
        a.require_symmetric()?;
        let n = a.rows();
        let threshold = PIVOT_TOL * a.max_abs();
        let mut lower = Matrix::zeros(n, n);
        let mut diag = Vec::with_capacity(n);

        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= lower[(j, k)] * lower[(j, k)] * diag[k];
            }
            if !(d.abs() > threshold) {
                return Err(Error::SingularOperator { index: j, pivot: d });
            }
            diag.push(d);
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)] * diag[k];
                }
                lower[(i, j)] = s / d;
            }
        }
        Ok(Ldlt { n, lower, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        b.check_dim("LDLᵀ right-hand side", self.n)?;
        let n = self.n;
        let mut x = b.clone();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * x[k];
            }
            x[i] = s;
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= d;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * x[k];
            }
            x[i] = s;
        }
        Ok(x)
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        let cols: Result<Vec<Vector>> = (0..b.cols()).map(|j| self.solve(&b.column(j))).collect();
        Ok(Matrix::from_columns(self.n, &cols?))
    }
}

/// Solves `A x = b` for symmetric `A` by LDLᵀ.
pub fn solve_sym(a: &Matrix, b: &Vector) -> Result<Vector> {
    Ldlt::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_returns_rhs() {
        let b = Vector::from(vec![1.5, -2.0, 0.25]);
        assert_eq!(solve_sym(&Matrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_system() {
        let a = Matrix::from_diag(&[2.0, 4.0]);
        let x = solve_sym(&a, &Vector::from(vec![2.0, 4.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        // 2x + y = 3, x + 2y = 3  =>  x = y = 1
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = solve_sym(&a, &Vector::from(vec![3.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_and_asymmetric_inputs_fail() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_sym(&a, &Vector::zeros(2)),
            Err(Error::SingularOperator { index: 1, .. })
        ));
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_sym(&b, &Vector::zeros(2)),
            Err(Error::NotSymmetric { .. })
        ));
    }
}
