//! Linear impulsive system data.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::semigroup::Semigroup;

/// Impulse times `0 < t_1 < .. < t_p < b` and horizon `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule {
    impulse_times: Vec<f64>,
    horizon: f64,
}

impl ImpulseSchedule {
    pub fn new(impulse_times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        let mut prev = 0.0;
        for (k, &t) in impulse_times.iter().enumerate() {
            if !(t > prev) || !(t < horizon) {
                return Err(Error::InvalidInput(format!(
                    "impulse time {k} = {t} must lie strictly between {prev} and horizon {horizon}"
                )));
            }
            prev = t;
        }
        Ok(ImpulseSchedule { impulse_times, horizon })
    }

    pub fn without_impulses(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    /// Number of impulses `p`.
    pub fn len(&self) -> usize {
        self.impulse_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impulse_times.is_empty()
    }

    pub fn impulse_times(&self) -> &[f64] {
        &self.impulse_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `t_k` for `k = 0..=p+1`, with `t_0 = 0` and `t_{p+1} = b`.
    pub fn time(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else if k <= self.len() {
            self.impulse_times[k - 1]
        } else {
            self.horizon
        }
    }

    /// `[t_k, t_{k+1}]` for interval `k = 0..=p`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.time(k), self.time(k + 1))
    }

    pub fn interval_count(&self) -> usize {
        self.len() + 1
    }
}

/// `z' = Az + Ωu`, `z(t_k^+) = (I + B_k) z(t_k) + D_k v_k`, `z(0) = z_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveSystem {
    semigroup: Semigroup,
    control_map: Matrix,
    jumps: Vec<Matrix>,
    impulse_maps: Vec<Matrix>,
    z0: Vector,
    schedule: ImpulseSchedule,
}

impl ImpulsiveSystem {
    pub fn new(
        semigroup: Semigroup,
        control_map: Matrix,
        jumps: Vec<Matrix>,
        impulse_maps: Vec<Matrix>,
        z0: Vector,
        schedule: ImpulseSchedule,
    ) -> Result<Self> {
        let n = semigroup.dim();
        if n == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        if control_map.rows() != n {
            return Err(Error::dims("control map rows", n, control_map.rows()));
        }
        if control_map.cols() == 0 {
            return Err(Error::InvalidInput("control map needs at least one column".into()));
        }
        let p = schedule.len();
        if jumps.len() != p {
            return Err(Error::dims("number of jump maps", p, jumps.len()));
        }
        if impulse_maps.len() != p {
            return Err(Error::dims("number of impulse maps", p, impulse_maps.len()));
        }
        for b in &jumps {
            b.check_shape("jump map", n, n)?;
        }
        let impulse_dim = impulse_maps.first().map_or(0, Matrix::cols);
        for d in &impulse_maps {
            d.check_shape("impulse map", n, impulse_dim)?;
        }
        z0.check_dim("initial state", n)?;
        let finite = control_map.is_finite()
            && jumps.iter().all(Matrix::is_finite)
            && impulse_maps.iter().all(Matrix::is_finite)
            && z0.is_finite();
        if !finite {
            return Err(Error::InvalidInput("system data has non-finite entries".into()));
        }
        Ok(ImpulsiveSystem {
            semigroup,
            control_map,
            jumps,
            impulse_maps,
            z0,
            schedule,
        })
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.semigroup
    }

    pub fn control_map(&self) -> &Matrix {
        &self.control_map
    }

    /// `B_k`, `k = 1..=p`.
    pub fn jump(&self, k: usize) -> &Matrix {
        &self.jumps[k - 1]
    }

    /// `D_k`, `k = 1..=p`.
    pub fn impulse_map(&self, k: usize) -> &Matrix {
        &self.impulse_maps[k - 1]
    }

    pub fn jumps(&self) -> &[Matrix] {
        &self.jumps
    }

    pub fn impulse_maps(&self) -> &[Matrix] {
        &self.impulse_maps
    }

    pub fn z0(&self) -> &Vector {
        &self.z0
    }

    pub fn schedule(&self) -> &ImpulseSchedule {
        &self.schedule
    }

    pub fn state_dim(&self) -> usize {
        self.semigroup.dim()
    }

    pub fn control_dim(&self) -> usize {
        self.control_map.cols()
    }

    /// Dimension of the impulse controls `v_k` (0 when `p = 0`).
    pub fn impulse_dim(&self) -> usize {
        self.impulse_maps.first().map_or(0, Matrix::cols)
    }

    pub fn impulse_count(&self) -> usize {
        self.schedule.len()
    }

    pub fn horizon(&self) -> f64 {
        self.schedule.horizon()
    }

    pub fn with_z0(&self, z0: Vector) -> Result<Self> {
        z0.check_dim("initial state", self.state_dim())?;
        let mut out = self.clone();
        out.z0 = z0;
        Ok(out)
    }

    /// `(I + B_k) x + D_k v`
    pub fn apply_jump(&self, k: usize, x: &Vector, v: &Vector) -> Vector {
        let mut out = x + &self.jump(k).mul_vec(x);
        out += &self.impulse_map(k).mul_vec(v);
        out
    }

    /// `(I + B_k)ᵀ x`
    pub fn apply_jump_adjoint(&self, k: usize, x: &Vector) -> Vector {
        x + &self.jump(k).tr_mul_vec(x)
    }

    /// `I + B_k` as a matrix.
    pub fn jump_operator(&self, k: usize) -> Matrix {
        &Matrix::identity(self.state_dim()) + self.jump(k)
    }
}
