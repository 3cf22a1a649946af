//! Evaluation of `S(t)` and `S*(t)` for the two supported backends.

use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::linalg::{Matrix, Vector};

/// Times in `[-TIME_CLAMP, 0)` are treated as `0` (node rounding).
pub const TIME_CLAMP: f64 = 1e-12;

pub(crate) fn checked_time(t: f64) -> Result<f64> {
    if t >= 0.0 {
        Ok(t)
    } else if t >= -TIME_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeTime(t))
    }
}

/// `S(t) = exp(tA)` on `R^N`.
#[derive(Debug, Clone, PartialEq)]
pub enum Semigroup {
    /// `A = −diag(λ_1, .., λ_N)`: `S(t)` scales coordinate `n` by `e^{−λ_n t}`.
    Spectral { decay_rates: Vec<f64> },
    /// Dense generator `A`; `S(t) = exp(tA)`.
    Dense { generator: Matrix },
}

impl Semigroup {
    pub fn spectral(decay_rates: Vec<f64>) -> Self {
        Semigroup::Spectral { decay_rates }
    }

    pub fn dense(generator: Matrix) -> Result<Self> {
        if !generator.is_square() {
            return Err(Error::dims("generator (square)", generator.rows(), generator.cols()));
        }
        if !generator.is_finite() {
            return Err(Error::InvalidInput("generator has non-finite entries".into()));
        }
        Ok(Semigroup::Dense { generator })
    }

    pub fn dim(&self) -> usize {
        match self {
            Semigroup::Spectral { decay_rates } => decay_rates.len(),
            Semigroup::Dense { generator } => generator.rows(),
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self, Semigroup::Spectral { .. })
    }

    pub fn decay_rates(&self) -> Option<&[f64]> {
        match self {
            Semigroup::Spectral { decay_rates } => Some(decay_rates),
            Semigroup::Dense { .. } => None,
        }
    }

    /// Diagonal multipliers `e^{−λ_n t}` (spectral backend only).
    pub fn multipliers(&self, t: f64) -> Result<Option<Vec<f64>>> {
        let t = checked_time(t)?;
        Ok(match self {
            Semigroup::Spectral { decay_rates } => Some(decay_rates.iter().map(|l| (-l * t).exp()).collect()),
            Semigroup::Dense { .. } => None,
        })
    }

    pub fn apply(&self, t: f64, v: &Vector) -> Result<Vector> {
        v.check_dim("semigroup argument", self.dim())?;
        let t = checked_time(t)?;
        if t == 0.0 {
            return Ok(v.clone());
        }
        match self {
            Semigroup::Spectral { decay_rates } => Ok(Vector::from_fn(v.dim(), |i| (-decay_rates[i] * t).exp() * v[i])),
            Semigroup::Dense { generator } => Ok(expm(&generator.scaled(t))?.mul_vec(v)),
        }
    }

    pub fn apply_adjoint(&self, t: f64, v: &Vector) -> Result<Vector> {
        match self {
            Semigroup::Spectral { .. } => self.apply(t, v),
            Semigroup::Dense { generator } => {
                v.check_dim("semigroup argument", self.dim())?;
                let t = checked_time(t)?;
                if t == 0.0 {
                    return Ok(v.clone());
                }
                Ok(expm(&generator.scaled(t))?.tr_mul_vec(v))
            }
        }
    }

    /// `S(t)` as a dense matrix.
    pub fn operator_matrix(&self, t: f64) -> Result<Matrix> {
        let t = checked_time(t)?;
        match self {
            Semigroup::Spectral { decay_rates } => Ok(Matrix::from_diag(
                &decay_rates.iter().map(|l| (-l * t).exp()).collect::<Vec<_>>(),
            )),
            Semigroup::Dense { generator } => {
                if t == 0.0 {
                    Ok(Matrix::identity(generator.rows()))
                } else {
                    expm(&generator.scaled(t))
                }
            }
        }
    }

    /// A reusable evaluation of `S(t)` for repeated application.
    pub fn evolution(&self, t: f64) -> Result<Evolution> {
        Ok(match self.multipliers(t)? {
            Some(m) => Evolution::Diagonal(m),
            None => Evolution::Dense(self.operator_matrix(t)?),
        })
    }
}

/// `S(t)` at a fixed `t`, precomputed.
#[derive(Debug, Clone, PartialEq)]
pub enum Evolution {
    Diagonal(Vec<f64>),
    Dense(Matrix),
}

impl Evolution {
    pub fn apply(&self, v: &Vector) -> Vector {
        match self {
            Evolution::Diagonal(d) => Vector::from_fn(v.dim(), |i| d[i] * v[i]),
            Evolution::Dense(m) => m.mul_vec(v),
        }
    }

    pub fn apply_adjoint(&self, v: &Vector) -> Vector {
        match self {
            Evolution::Diagonal(_) => self.apply(v),
            Evolution::Dense(m) => m.tr_mul_vec(v),
        }
    }

    /// `S(t) · M`
    pub fn left_mul(&self, m: &Matrix) -> Matrix {
        match self {
            Evolution::Diagonal(d) => Matrix::from_fn(m.rows(), m.cols(), |i, j| d[i] * m[(i, j)]),
            Evolution::Dense(s) => s.matmul(m),
        }
    }

    /// `M · S(t)`
    pub fn right_mul(&self, m: &Matrix) -> Matrix {
        match self {
            Evolution::Diagonal(d) => Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * d[j]),
            Evolution::Dense(s) => m.matmul(s),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        match self {
            Evolution::Diagonal(d) => Matrix::from_diag(d),
            Evolution::Dense(m) => m.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn nilpotent() -> Semigroup {
        Semigroup::dense(Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        let s = Semigroup::spectral(vec![1.0, 4.0]);
        let v = Vector::from(vec![0.3, -2.0]);
        assert_eq!(s.apply(0.0, &v).unwrap(), v);
        assert_eq!(s.operator_matrix(0.0).unwrap(), Matrix::identity(2));
        assert_eq!(nilpotent().apply_adjoint(0.0, &v).unwrap(), v);
    }

    #[test]
    fn scalar_decay() {
        let s = Semigroup::spectral(vec![1.0]);
        let z = s.apply(1.0, &Vector::from(vec![1.0])).unwrap();
        assert!((z[0] - 0.367_879_441_171_442_3).abs() < 1e-15);
        let m = Semigroup::spectral(vec![1.0, 2.0]).operator_matrix(1.0).unwrap();
        assert!((m[(0, 0)] - (-1.0f64).exp()).abs() < 1e-16);
        assert!((m[(1, 1)] - (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn nilpotent_generator() {
        let s = nilpotent();
        let z = s.apply(1.0, &Vector::from(vec![0.0, 1.0])).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
        let w = s.apply_adjoint(1.0, &Vector::from(vec![1.0, 0.0])).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        let m = s.operator_matrix(2.0).unwrap();
        assert!((m[(0, 1)] - 2.0).abs() < 1e-14 && (m[(1, 0)]).abs() < 1e-14);
    }

    #[test]
    fn negative_time() {
        let s = Semigroup::spectral(vec![1.0]);
        let v = Vector::from(vec![1.0]);
        assert_eq!(s.apply(-1e-13, &v).unwrap(), v);
        assert!(matches!(s.apply(-1e-6, &v), Err(Error::NegativeTime(_))));
        assert!(nilpotent().operator_matrix(-1.0).is_err());
    }

    #[test]
    fn dimension_checked() {
        let s = Semigroup::spectral(vec![1.0, 2.0]);
        assert!(s.apply(1.0, &Vector::zeros(3)).is_err());
    }
}
