//! The resolvent-like operator `R(α) = (α(I − π_D) + Γ_tot)⁻¹`.
//!
//! Two evaluations are provided: a direct LDLᵀ solve of the assembled
//! operator, and the factorized form
//! `R(α) = (I − α(αI + Γ_tot)⁻¹π_D)⁻¹ (αI + Γ_tot)⁻¹`, whose correction step
//! is a `d × d` system in subspace coordinates.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenvalue_sym, spectral_norm, Ldlt, Matrix, ProjectionSubspace, Vector};

fn check_inputs(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if !total.is_square() {
        return Err(Error::dims("Gramian (square)", total.rows(), total.cols()));
    }
    if subspace.ambient_dim() != total.rows() {
        return Err(Error::dims(
            "subspace ambient dimension",
            total.rows(),
            subspace.ambient_dim(),
        ));
    }
    total.require_symmetric()
}

/// `δ = λ_min(Qᵀ Γ_tot Q)` for an orthonormal basis `Q` of `D`.
pub fn delta(total: &Matrix, subspace: &ProjectionSubspace) -> Result<f64> {
    if subspace.is_empty() {
        return Err(Error::EmptySubspace);
    }
    if subspace.ambient_dim() != total.rows() {
        return Err(Error::dims(
            "subspace ambient dimension",
            total.rows(),
            subspace.ambient_dim(),
        ));
    }
    total.require_symmetric()?;
    let q = subspace.basis_matrix();
    let compressed = q.transpose().matmul(total).matmul(&q).symmetrized();
    smallest_eigenvalue_sym(&compressed)
}

/// `α(I − π_D) + Γ_tot` as a matrix.
pub fn operator(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64) -> Matrix {
    let n = total.rows();
    let mut out = total.clone();
    out.add_scaled(alpha, &Matrix::identity(n));
    out.add_scaled(-alpha, &subspace.projector());
    out.symmetrized()
}

/// Reusable factorizations of `R(α)` for one `(Γ_tot, D, α)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    alpha: f64,
    subspace: ProjectionSubspace,
    direct: Ldlt,
    shifted: Ldlt,
    // (αI + Γ)⁻¹ Q and the factored correction I_d − α Qᵀ(αI + Γ)⁻¹Q.
    shifted_basis: Matrix,
    correction: Option<Ldlt>,
}

impl Resolvent {
    pub fn new(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64) -> Result<Self> {
        check_inputs(total, subspace, alpha)?;
        let direct = Ldlt::factor(&operator(total, subspace, alpha))?;
        let mut shifted_op = total.clone();
        shifted_op.add_scaled(alpha, &Matrix::identity(total.rows()));
        let shifted = Ldlt::factor(&shifted_op.symmetrized())?;
        let q = subspace.basis_matrix();
        let shifted_basis = shifted.solve_matrix(&q)?;
        let correction = if subspace.is_empty() {
            None
        } else {
            let mut c = Matrix::identity(subspace.dim());
            c.add_scaled(-alpha, &q.transpose().matmul(&shifted_basis));
            Some(Ldlt::factor(&c.symmetrized())?)
        };
        Ok(Resolvent {
            alpha,
            subspace: subspace.clone(),
            direct,
            shifted,
            shifted_basis,
            correction,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn solve_direct(&self, rhs: &Vector) -> Result<Vector> {
        rhs.check_dim("resolvent right-hand side", self.direct.dim())?;
        self.direct.solve(rhs)
    }

    pub fn solve_factorized(&self, rhs: &Vector) -> Result<Vector> {
        rhs.check_dim("resolvent right-hand side", self.direct.dim())?;
        let y = self.shifted.solve(rhs)?;
        let Some(correction) = &self.correction else {
            return Ok(y);
        };
        let c = correction.solve(&self.subspace.coordinates(&y))?;
        let mut x = y;
        x.axpy(self.alpha, &self.shifted_basis.mul_vec(&c));
        Ok(x)
    }

    /// `‖α(αI + Γ_tot)⁻¹ π_D‖₂`.
    pub fn contraction_norm(&self) -> f64 {
        self.alpha * spectral_norm(&self.shifted_basis)
    }

    /// `α(αI + Γ_tot)⁻¹ π_D h`.
    pub fn damped_projection(&self, h: &Vector) -> Result<Vector> {
        h.check_dim("vector", self.direct.dim())?;
        if self.subspace.is_empty() {
            return Ok(Vector::zeros(h.dim()));
        }
        Ok(self
            .shifted_basis
            .mul_vec(&self.subspace.coordinates(h))
            .scaled(self.alpha))
    }

    /// `α(αI + Γ_tot)⁻¹ h`.
    pub fn damped(&self, h: &Vector) -> Result<Vector> {
        Ok(self.shifted.solve(h)?.scaled(self.alpha))
    }
}

pub fn solve_direct(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64, rhs: &Vector) -> Result<Vector> {
    check_inputs(total, subspace, alpha)?;
    Ldlt::factor(&operator(total, subspace, alpha))?.solve(rhs)
}

pub fn solve_factorized(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64, rhs: &Vector) -> Result<Vector> {
    Resolvent::new(total, subspace, alpha)?.solve_factorized(rhs)
}

pub fn contraction_norm(total: &Matrix, subspace: &ProjectionSubspace, alpha: f64) -> Result<f64> {
    check_inputs(total, subspace, alpha)?;
    if subspace.is_empty() {
        return Ok(0.0);
    }
    let mut shifted = total.clone();
    shifted.add_scaled(alpha, &Matrix::identity(total.rows()));
    let x = Ldlt::factor(&shifted.symmetrized())?.solve_matrix(&subspace.basis_matrix())?;
    Ok(alpha * spectral_norm(&x))
}
