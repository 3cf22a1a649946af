//! Seeded random instances for property checks and the verification suite.

use alloc::vec::Vec;

#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, Matrix, ProjectionSubspace, Vector};
use crate::semigroup::Semigroup;
use crate::system::{ImpulseSchedule, ImpulsiveSystem};

/// The generator every seeded routine in the workspace draws from.
pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn normal_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_| StandardNormal.sample(rng))
}

pub fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `G Gᵀ / n + shift·I` with Gaussian `G`.
pub fn spd_matrix<R: Rng>(rng: &mut R, n: usize, shift: f64) -> Matrix {
    let g = normal_matrix(rng, n, n);
    let mut m = g.matmul_tr(&g).scaled(1.0 / n.max(1) as f64);
    m.add_scaled(shift, &Matrix::identity(n));
    m.symmetrized()
}

/// The span of `d` Gaussian vectors in `R^n`.
pub fn random_subspace<R: Rng>(rng: &mut R, n: usize, d: usize) -> Result<ProjectionSubspace> {
    if d == 0 {
        return Ok(ProjectionSubspace::empty(n));
    }
    let vectors: Vec<Vector> = (0..d).map(|_| normal_vector(rng, n)).collect();
    orthonormalize(&vectors, 1e-10)
}

/// Log-uniform on `[lo, hi]`.
pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Spectral,
    Dense,
}

/// Shape of a random impulsive system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemShape {
    pub state_dim: usize,
    pub control_dim: usize,
    pub impulse_dim: usize,
    pub impulses: usize,
    pub horizon: f64,
    pub backend: Backend,
}

impl SystemShape {
    /// Dimensions drawn from `state ≤ max_state`, `p ≤ max_impulses`.
    pub fn random<R: Rng>(rng: &mut R, max_state: usize, max_impulses: usize, backend: Backend) -> Self {
        let state_dim = rng.random_range(1..=max_state);
        SystemShape {
            state_dim,
            control_dim: rng.random_range(1..=state_dim),
            impulse_dim: rng.random_range(1..=state_dim),
            impulses: rng.random_range(0..=max_impulses),
            horizon: rng.random_range(0.5..2.0),
            backend,
        }
    }
}

/// Impulse times at jittered fractions of the horizon, kept apart.
fn random_schedule<R: Rng>(rng: &mut R, p: usize, horizon: f64) -> Result<ImpulseSchedule> {
    let slot = horizon / (p + 1) as f64;
    let times = (1..=p)
        .map(|k| slot * (k as f64 + rng.random_range(-0.3..0.3)))
        .collect();
    ImpulseSchedule::new(times, horizon)
}

/// A random system with nonzero `B_k`, `D_k` and `Ω`. Spectral rates lie in
/// `[0, 5]`; dense generators are Gaussian with norm about 2, shifted to be
/// mildly dissipative.
pub fn random_system<R: Rng>(rng: &mut R, shape: &SystemShape) -> Result<ImpulsiveSystem> {
    let n = shape.state_dim;
    if n == 0 || shape.control_dim == 0 || shape.impulse_dim == 0 {
        return Err(Error::InvalidInput("random system dimensions must be positive".into()));
    }
    let semigroup = match shape.backend {
        Backend::Spectral => Semigroup::spectral((0..n).map(|_| rng.random_range(0.0..5.0)).collect()),
        Backend::Dense => {
            let mut a = normal_matrix(rng, n, n).scaled(2.0 / (n as f64).sqrt());
            a.add_scaled(-1.0, &Matrix::identity(n));
            Semigroup::dense(a)?
        }
    };
    let omega = normal_matrix(rng, n, shape.control_dim);
    let jumps = (0..shape.impulses)
        .map(|_| normal_matrix(rng, n, n).scaled(0.5 / (n as f64).sqrt()))
        .collect();
    let impulse_maps = (0..shape.impulses)
        .map(|_| normal_matrix(rng, n, shape.impulse_dim))
        .collect();
    let z0 = normal_vector(rng, n);
    let schedule = random_schedule(rng, shape.impulses, shape.horizon)?;
    ImpulsiveSystem::new(semigroup, omega, jumps, impulse_maps, z0, schedule)
}
