//! Matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant (Higham 2005).

use crate::error::{Error, Result};
use crate::linalg::{solve_general, Matrix};
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

// Coefficients of the [13/13] Padé approximant to exp.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which [13/13] meets double-precision backward error.
const THETA_13: f64 = 5.371_920_351_148_152;

/// `exp(A)` for a square matrix.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::dims("matrix exponential (square)", a.rows(), a.cols()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = a.one_norm();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scaled(0.5f64.powi(squarings));
    let mut result = pade13(&scaled)?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Ok(result)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let b = &PADE13;
    let ident = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut inner = a6.scaled(b[13]);
    inner.add_scaled(b[11], &a4);
    inner.add_scaled(b[9], &a2);
    let mut odd = a6.matmul(&inner);
    odd.add_scaled(b[7], &a6);
    odd.add_scaled(b[5], &a4);
    odd.add_scaled(b[3], &a2);
    odd.add_scaled(b[1], &ident);
    let u = a.matmul(&odd);

    let mut inner = a6.scaled(b[12]);
    inner.add_scaled(b[10], &a4);
    inner.add_scaled(b[8], &a2);
    let mut v = a6.matmul(&inner);
    v.add_scaled(b[6], &a6);
    v.add_scaled(b[4], &a4);
    v.add_scaled(b[2], &a2);
    v.add_scaled(b[0], &ident);

    // (V − U)⁻¹ (V + U)
    solve_general(&(&v - &u), &(&v + &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn nilpotent_series_truncates() {
        let g = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = expm(&g.scaled(2.0)).unwrap();
        let expected = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!((&e - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        let g = Matrix::from_diag(&[-1.0, -30.0, 2.5]);
        let e = expm(&g).unwrap();
        for (i, l) in [-1.0f64, -30.0, 2.5].iter().enumerate() {
            let want = l.exp();
            assert!((e[(i, i)] - want).abs() <= 1e-14 * want.max(1.0));
        }
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, −θ], [θ, 0]]) is the rotation by θ; θ = 10 forces squaring.
        let theta = 10.0f64;
        let g = Matrix::from_rows(&[vec![0.0, -theta], vec![theta, 0.0]]).unwrap();
        let e = expm(&g).unwrap();
        assert!((e[(0, 0)] - theta.cos()).abs() < 1e-12);
        assert!((e[(1, 0)] - theta.sin()).abs() < 1e-12);
    }
}
