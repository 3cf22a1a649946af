//! Spectral truncation of the impulsive heat equation on `(0, 1)`.
//!
//! State coordinates are coefficients in the sine eigenbasis. The control
//! space starts at input mode 2: input mode 2 drives `2e_1 + e_2`, input
//! mode `n ≥ 3` drives `e_n`. Every impulse resets the state,
//! `z(t_k^+) = −v_k` (`B_k = D_k = −I`), so all transport factors except
//! `K_p` vanish and `Γ_tot = Γ + S(2(b − t_p))`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gramian::GramianBundle;
use crate::grid::TimeGrid;
use crate::linalg::{smallest_eigenvalue_sym, Matrix, ProjectionSubspace, Vector};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::QuadratureRule;
use crate::resolvent::delta;
use crate::semigroup::Semigroup;
use crate::semilinear::{picard_solve, FixedPointProblem, PicardConfig, PicardStatus};
use crate::synthesis::{synthesize, verify_residual};
use crate::system::{ImpulseSchedule, ImpulsiveSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenConvention {
    /// `λ_n = n²π²`, the Dirichlet Laplacian on `(0, 1)`.
    #[default]
    Dirichlet,
    /// `λ_n = n²`.
    PaperLiteral,
}

impl EigenConvention {
    pub fn rate(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            EigenConvention::Dirichlet => n * n * core::f64::consts::PI * core::f64::consts::PI,
            EigenConvention::PaperLiteral => n * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatConfig {
    pub modes: usize,
    pub schedule: ImpulseSchedule,
    pub convention: EigenConvention,
    /// Initial coefficients; `e_1` when absent.
    pub z0: Option<Vector>,
}

impl HeatConfig {
    /// Impulses at `b/3` and `2b/3`.
    pub fn standard(modes: usize, horizon: f64) -> Result<Self> {
        Ok(HeatConfig {
            modes,
            schedule: ImpulseSchedule::new(alloc::vec![horizon / 3.0, 2.0 * horizon / 3.0], horizon)?,
            convention: EigenConvention::Dirichlet,
            z0: None,
        })
    }

    pub fn decay_rates(&self) -> Vec<f64> {
        (1..=self.modes).map(|n| self.convention.rate(n)).collect()
    }

    /// A Gauss–Legendre rule graded enough to resolve the stiffest mode.
    pub fn quadrature(&self, order: usize, panels_per_interval: usize) -> Result<QuadratureRule> {
        let longest = (0..self.schedule.interval_count())
            .map(|k| {
                let (a, c) = self.schedule.interval(k);
                c - a
            })
            .fold(0.0, f64::max);
        QuadratureRule::resolving(order, panels_per_interval, self.convention.rate(self.modes) * longest)
    }
}

/// The control map: column `j` is input mode `j + 2`.
pub fn control_map(modes: usize) -> Matrix {
    Matrix::from_fn(modes, modes - 1, |row, col| match (row, col) {
        (0, 0) => 2.0,
        (r, c) if r == c + 1 => 1.0,
        _ => 0.0,
    })
}

pub fn build_heat(cfg: &HeatConfig) -> Result<ImpulsiveSystem> {
    let n = cfg.modes;
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "heat testbed needs at least 2 modes, got {n}"
        )));
    }
    let minus_identity = Matrix::identity(n).scaled(-1.0);
    let p = cfg.schedule.len();
    ImpulsiveSystem::new(
        Semigroup::spectral(cfg.decay_rates()),
        control_map(n),
        alloc::vec![minus_identity.clone(); p],
        alloc::vec![minus_identity; p],
        cfg.z0.clone().unwrap_or_else(|| Vector::unit(n, 0)),
        cfg.schedule.clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    /// The unit coefficient vector of mode `n` (1-based).
    Eigenmode(usize),
    /// `c_n = ξ_n n^{−s}` with seeded standard normal `ξ_n`, normalized.
    SmoothRandom { decay: f64, seed: u64 },
}

pub fn build_target(kind: TargetKind, modes: usize) -> Result<Vector> {
    match kind {
        TargetKind::Eigenmode(n) => {
            if n == 0 || n > modes {
                return Err(Error::IndexOutOfRange { index: n, max: modes });
            }
            Ok(Vector::unit(modes, n - 1))
        }
        TargetKind::SmoothRandom { decay, seed } => {
            if !(decay > 0.5) {
                return Err(Error::InvalidInput(format!(
                    "smooth target decay must exceed 1/2, got {decay}"
                )));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let raw = Vector::from_fn(modes, |i| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                xi * ((i + 1) as f64).powf(-decay)
            });
            let norm = raw.norm();
            if norm == 0.0 {
                return Err(Error::InvalidInput("degenerate random target".into()));
            }
            Ok(raw.scaled(1.0 / norm))
        }
    }
}

/// The span of the first `d` eigenmodes.
pub fn build_subspace(d: usize, modes: usize) -> Result<ProjectionSubspace> {
    if d > modes {
        return Err(Error::IndexOutOfRange { index: d, max: modes });
    }
    Ok(ProjectionSubspace::coordinate(modes, d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub residual_norm: f64,
    pub projected_residual_norm: f64,
    pub predicted_residual_norm: f64,
    pub picard_iterations: usize,
    /// `λ_min` of the Gramian compressed to `D`; `None` for `D = {0}`.
    pub delta: Option<f64>,
    pub total_min_eig: f64,
    pub status: String,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.status == "ok"
    }

    fn failed(alpha: f64, delta: Option<f64>, total_min_eig: f64, status: String) -> Self {
        SweepRow {
            alpha,
            residual_norm: f64::NAN,
            projected_residual_norm: f64::NAN,
            predicted_residual_norm: f64::NAN,
            picard_iterations: 0,
            delta,
            total_min_eig,
            status,
        }
    }
}

/// α-independent data shared by every row of a sweep.
pub struct SweepContext<'a> {
    pub system: &'a ImpulsiveSystem,
    pub bundle: &'a GramianBundle,
    pub grid: &'a TimeGrid,
    pub subspace: &'a ProjectionSubspace,
    pub target: &'a Vector,
    pub mu: &'a dyn Nonlinearity,
    pub picard: PicardConfig,
    pub delta: Option<f64>,
    pub total_min_eig: f64,
}

impl<'a> SweepContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        system: &'a ImpulsiveSystem,
        bundle: &'a GramianBundle,
        grid: &'a TimeGrid,
        subspace: &'a ProjectionSubspace,
        target: &'a Vector,
        mu: &'a dyn Nonlinearity,
        picard: PicardConfig,
    ) -> Result<Self> {
        let delta = if subspace.is_empty() {
            None
        } else {
            Some(delta(&bundle.total, subspace)?)
        };
        let total_min_eig = smallest_eigenvalue_sym(&bundle.total)?;
        Ok(SweepContext {
            system,
            bundle,
            grid,
            subspace,
            target,
            mu,
            picard,
            delta,
            total_min_eig,
        })
    }

    /// One row; failures are recorded in `status`.
    pub fn row(&self, alpha: f64) -> SweepRow {
        match self.try_row(alpha) {
            Ok(row) => row,
            Err(e) => SweepRow::failed(alpha, self.delta, self.total_min_eig, format!("error: {e}")),
        }
    }

    fn try_row(&self, alpha: f64) -> Result<SweepRow> {
        if self.mu.is_zero() {
            let result = synthesize(self.system, self.bundle, self.subspace, alpha, self.target)?;
            let check = verify_residual(self.system, self.subspace, &result, self.grid)?;
            return Ok(SweepRow {
                alpha,
                residual_norm: check.residual,
                projected_residual_norm: check.projected,
                predicted_residual_norm: result.predicted_residual.norm(),
                picard_iterations: 0,
                delta: self.delta,
                total_min_eig: self.total_min_eig,
                status: String::from("ok"),
            });
        }
        let problem = FixedPointProblem::new(
            self.system,
            self.bundle,
            self.grid,
            self.subspace,
            alpha,
            self.target,
            self.mu,
        )?;
        let outcome = picard_solve(&problem, &self.picard)?;
        let terminal = outcome.trajectory.terminal().ok_or(Error::EmptyTrajectory)?;
        let residual = terminal - self.target;
        let status = match outcome.status {
            PicardStatus::Converged => String::from("ok"),
            PicardStatus::NoConvergence { .. } => String::from("no_convergence"),
        };
        Ok(SweepRow {
            alpha,
            residual_norm: residual.norm(),
            projected_residual_norm: self.subspace.project(&residual)?.norm(),
            predicted_residual_norm: outcome.synthesis.predicted_residual.norm(),
            picard_iterations: outcome.iterations,
            delta: self.delta,
            total_min_eig: self.total_min_eig,
            status,
        })
    }
}

/// Rows in the order of `alphas`, which must be positive and descending.
pub fn alpha_sweep(ctx: &SweepContext<'_>, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    check_alphas(alphas)?;
    Ok(alphas.iter().map(|&a| ctx.row(a)).collect())
}

pub fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("alpha grid is empty".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidInput(format!("alpha values must be positive, got {a}")));
    }
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("alpha grid must be strictly descending".into()));
    }
    Ok(())
}

/// `10^0, 10^{−1}, .., 10^{−decades}`.
pub fn decade_grid(decades: usize) -> Vec<f64> {
    (0..=decades).map(|k| 10f64.powi(-(k as i32))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramian::{assemble, closed_form_bundle};
    use crate::nonlinearity::ZeroForcing;
    use alloc::vec;

    #[test]
    fn control_map_structure() {
        let omega = control_map(5);
        let mode2 = omega.mul_vec(&Vector::unit(4, 0));
        assert_eq!(mode2.as_slice(), &[2.0, 1.0, 0.0, 0.0, 0.0]);
        let mode3 = omega.mul_vec(&Vector::unit(4, 1));
        assert_eq!(mode3.as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn impulse_resets_state() {
        let sys = build_heat(&HeatConfig::standard(4, 1.0).unwrap()).unwrap();
        let z = Vector::from(vec![1.0, -2.0, 3.0, 0.5]);
        let w = Vector::from(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(sys.apply_jump(1, &z, &w), -&w);
    }

    #[test]
    fn targets() {
        assert_eq!(
            build_target(TargetKind::Eigenmode(1), 3).unwrap().as_slice(),
            &[1.0, 0.0, 0.0]
        );
        assert_eq!(
            build_target(TargetKind::Eigenmode(3), 3).unwrap().as_slice(),
            &[0.0, 0.0, 1.0]
        );
        assert!(build_target(TargetKind::Eigenmode(4), 3).is_err());
        let kind = TargetKind::SmoothRandom { decay: 2.0, seed: 7 };
        let a = build_target(kind, 16).unwrap();
        assert_eq!(a, build_target(kind, 16).unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-15);
        assert!(build_target(TargetKind::SmoothRandom { decay: 0.5, seed: 7 }, 4).is_err());
    }

    #[test]
    fn subspaces() {
        assert!(build_subspace(0, 8).unwrap().is_empty());
        assert_eq!(build_subspace(8, 8).unwrap().projector(), Matrix::identity(8));
        assert!(build_subspace(9, 8).is_err());
    }

    #[test]
    fn total_is_tail_block_plus_reset() {
        let cfg = HeatConfig::standard(6, 1.0).unwrap();
        let sys = build_heat(&cfg).unwrap();
        let closed = closed_form_bundle(&sys).unwrap();
        assert_eq!(closed.free_map().max_abs(), 0.0);
        assert_eq!(closed.theta.max_abs(), 0.0);
        assert_eq!(closed.theta_tilde.max_abs(), 0.0);
        let reset = sys.semigroup().operator_matrix(2.0 / 3.0).unwrap();
        let diff = &closed.total - &(&closed.gamma + &reset);
        assert!(diff.max_abs() < 1e-15);
        assert!(smallest_eigenvalue_sym(&closed.total).unwrap() > 0.0);
    }

    #[test]
    fn linear_sweep_rows() {
        let cfg = HeatConfig::standard(8, 1.0).unwrap();
        let sys = build_heat(&cfg).unwrap();
        let grid = TimeGrid::new(sys.schedule(), &cfg.quadrature(20, 1).unwrap());
        let bundle = assemble(&sys, &grid).unwrap();
        let h = build_target(TargetKind::SmoothRandom { decay: 1.0, seed: 3 }, 8).unwrap();
        let p = build_subspace(0, 8).unwrap();
        let ctx = SweepContext::new(&sys, &bundle, &grid, &p, &h, &ZeroForcing, PicardConfig::default()).unwrap();
        let rows = alpha_sweep(&ctx, &[1.0, 0.1]).unwrap();
        assert!(rows.iter().all(SweepRow::converged));
        assert!(rows[0].residual_norm > rows[1].residual_norm && rows[1].residual_norm > 0.0);
        assert!(alpha_sweep(&ctx, &[0.1, 1.0]).is_err());

        let full = build_subspace(8, 8).unwrap();
        let ctx = SweepContext::new(&sys, &bundle, &grid, &full, &h, &ZeroForcing, PicardConfig::default()).unwrap();
        for row in alpha_sweep(&ctx, &[1.0, 1e-3]).unwrap() {
            assert!(row.residual_norm <= 1e-9, "{row:?}");
        }
    }
}
