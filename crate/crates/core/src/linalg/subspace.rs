use alloc::vec::Vec;

use super::{Matrix, Vector};
use crate::error::{Error, Result};

/// Orthonormal basis of a finite-dimensional subspace `D ⊂ H`; realizes the
/// orthogonal projection `π_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSubspace {
    ambient: usize,
    basis: Vec<Vector>,
}

impl ProjectionSubspace {
    /// The trivial subspace `{0}`; `π_D = 0`.
    pub fn empty(ambient: usize) -> Self {
        ProjectionSubspace {
            ambient,
            basis: Vec::new(),
        }
    }

    /// `D = H`; `π_D = I`.
    pub fn full(ambient: usize) -> Self {
        Self::coordinate(ambient, ambient)
    }

    /// Span of the first `d` coordinate vectors.
    pub fn coordinate(ambient: usize, d: usize) -> Self {
        ProjectionSubspace {
            ambient,
            basis: (0..d.min(ambient)).map(|i| Vector::unit(ambient, i)).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Basis as an `N × d` matrix.
    pub fn basis_matrix(&self) -> Matrix {
        Matrix::from_columns(self.ambient, &self.basis)
    }

    /// Coordinates `Qᵀ v` in the basis.
    pub fn coordinates(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i| self.basis[i].dot(v))
    }

    /// `Q c` for subspace coordinates `c`.
    pub fn embed(&self, coords: &Vector) -> Vector {
        let mut out = Vector::zeros(self.ambient);
        for (q, c) in self.basis.iter().zip(coords.iter()) {
            out.axpy(*c, q);
        }
        out
    }

    pub fn project(&self, v: &Vector) -> Result<Vector> {
        v.check_dim("projection", self.ambient)?;
        Ok(self.embed(&self.coordinates(v)))
    }

    /// `(I − π_D) v`
    pub fn complement(&self, v: &Vector) -> Result<Vector> {
        Ok(v - &self.project(v)?)
    }

    /// `π_D` as an `N × N` matrix.
    pub fn projector(&self) -> Matrix {
        let mut p = Matrix::zeros(self.ambient, self.ambient);
        for q in &self.basis {
            p.rank1_update(1.0, q, q);
        }
        p
    }
}

/// Modified Gram–Schmidt with one re-orthogonalization pass. Inputs whose
/// deflated norm falls below `tol` times their original norm are dropped.
pub fn orthonormalize(spanning: &[Vector], tol: f64) -> Result<ProjectionSubspace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "orthonormalization tolerance must be positive, got {tol}"
        )));
    }
    let Some(first) = spanning.first() else {
        return Err(Error::InvalidInput(
            "orthonormalize needs at least one vector; use ProjectionSubspace::empty for d = 0".into(),
        ));
    };
    let n = first.dim();
    let mut basis: Vec<Vector> = Vec::new();
    for v in spanning {
        v.check_dim("spanning vector", n)?;
        let original = v.norm();
        if original == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _pass in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q);
            }
        }
        let remaining = w.norm();
        if remaining <= tol * original {
            continue;
        }
        basis.push(w.scaled(1.0 / remaining));
    }
    if basis.is_empty() {
        return Err(Error::EmptySubspace);
    }
    Ok(ProjectionSubspace { ambient: n, basis })
}

pub fn project(p: &ProjectionSubspace, v: &Vector) -> Result<Vector> {
    p.project(v)
}
