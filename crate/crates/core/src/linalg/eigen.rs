use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

use super::Matrix;
use crate::error::Result;

const MAX_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix in ascending order, by the cyclic
/// Jacobi method. Jacobi keeps small eigenvalues accurate relative to the
/// matrix norm, which is what the positivity checks need.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    a.require_symmetric()?;
    let n = a.rows();
    let mut m = a.symmetrized();
    let total = m.frobenius_norm();
    if total == 0.0 {
        return Ok(alloc::vec![0.0; n]);
    }

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-17 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    Ok(eig)
}

pub fn smallest_eigenvalue_sym(a: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.first().copied().unwrap_or(0.0))
}

pub fn largest_eigenvalue_sym(a: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.last().copied().unwrap_or(0.0))
}

/// Operator 2-norm, `sqrt(λ_max(AᵀA))` on the smaller Gram matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    let gram = if a.rows() >= a.cols() {
        a.transpose().matmul(a)
    } else {
        a.matmul_tr(a)
    };
    // The Gram matrix is symmetric up to rounding by construction.
    let lmax = largest_eigenvalue_sym(&gram.symmetrized()).unwrap_or(0.0);
    lmax.max(0.0).sqrt()
}
