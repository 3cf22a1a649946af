//! Semilinear synthesis by Picard iteration of the map `G_α`.
//!
//! For a trajectory `z`, `G_α(z)` freezes `μ(s, z(s))`, forms
//!
//! ```text
//! σ_α(z) = h − F z_0 − Σ_{i≤p} L_i ∫_{t_{i−1}}^{t_i} S(t_i − s) μ(s, z(s)) ds
//!                    − ∫_{t_p}^b S(b − s) μ(s, z(s)) ds,
//! ```
//!
//! synthesizes both the distributed and the impulse controls from
//! `φ = R(α) σ_α(z)`, and propagates with `μ` frozen at `z`. Every image
//! therefore satisfies `G_α(z)(b) − h = −α(I − π_D) φ`.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

use crate::error::{Error, Result};
use crate::gramian::GramianBundle;
use crate::grid::TimeGrid;
use crate::linalg::{spectral_norm, ProjectionSubspace, Vector};
use crate::nonlinearity::{Growth, Nonlinearity, ZeroForcing};
use crate::resolvent::{contraction_norm, Resolvent};
use crate::semigroup::Evolution;
use crate::synthesis::{synthesize_from_sigma, SynthesisResult};
use crate::system::ImpulsiveSystem;
use crate::trajectory::{frozen_forcing, interval_duhamel, pc_norm, propagate, ControlLaw, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Stop once `‖z_{n+1} − z_n‖_PC < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// `θ` in `z_{n+1} = θ G_α(z_n) + (1 − θ) z_n`.
    pub damping: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-10,
            max_iter: 50,
            damping: 1.0,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "picard tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("picard max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "picard damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// `σ_α(z)`.
pub fn sigma_semilinear(
    system: &ImpulsiveSystem,
    bundle: &GramianBundle,
    grid: &TimeGrid,
    h: &Vector,
    traj: &Trajectory,
    mu: &dyn Nonlinearity,
) -> Result<Vector> {
    h.check_dim("target", system.state_dim())?;
    let mut sigma = h - &bundle.free_map().mul_vec(system.z0());
    if mu.is_zero() {
        return Ok(sigma);
    }
    let forcing = frozen_forcing(system, grid, mu, Some(traj))?;
    for (k, iv) in grid.intervals().iter().enumerate() {
        let values = &forcing[iv.first_node..iv.first_node + iv.node_count()];
        let integral = interval_duhamel(system, iv, values)?;
        let transported = match bundle.left_factors().get(k) {
            Some(l) => l.mul_vec(&integral),
            None => integral,
        };
        sigma -= &transported;
    }
    Ok(sigma)
}

/// Shared, α-specific data for repeated applications of `G_α`.
pub struct FixedPointProblem<'a> {
    pub system: &'a ImpulsiveSystem,
    pub bundle: &'a GramianBundle,
    pub grid: &'a TimeGrid,
    pub subspace: &'a ProjectionSubspace,
    pub resolvent: Resolvent,
    pub target: &'a Vector,
    pub mu: &'a dyn Nonlinearity,
}

impl<'a> FixedPointProblem<'a> {
    pub fn new(
        system: &'a ImpulsiveSystem,
        bundle: &'a GramianBundle,
        grid: &'a TimeGrid,
        subspace: &'a ProjectionSubspace,
        alpha: f64,
        target: &'a Vector,
        mu: &'a dyn Nonlinearity,
    ) -> Result<Self> {
        Ok(FixedPointProblem {
            system,
            bundle,
            grid,
            subspace,
            resolvent: Resolvent::new(&bundle.total, subspace, alpha)?,
            target,
            mu,
        })
    }

    /// `G_α(z)` together with the synthesis that produced it.
    pub fn apply(&self, z: &Trajectory) -> Result<(Trajectory, SynthesisResult)> {
        let sigma = sigma_semilinear(self.system, self.bundle, self.grid, self.target, z, self.mu)?;
        let synthesis = synthesize_from_sigma(self.bundle, &self.resolvent, self.subspace, self.target, sigma)?;
        let image = propagate(self.system, &synthesis.control, self.grid, self.mu, Some(z))?;
        Ok((image, synthesis))
    }

    /// `‖z(b) − h + α(I − π_D) R(α) σ_α(z)‖`.
    pub fn terminal_identity_error(&self, z: &Trajectory) -> Result<f64> {
        let sigma = sigma_semilinear(self.system, self.bundle, self.grid, self.target, z, self.mu)?;
        let phi = self.resolvent.solve_direct(&sigma)?;
        let terminal = z.terminal().ok_or(Error::EmptyTrajectory)?;
        let mut r = terminal - self.target;
        r.axpy(self.resolvent.alpha(), &self.subspace.complement(&phi)?);
        Ok(r.norm())
    }
}

/// `G_α(z)` for a single trajectory.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_map(
    system: &ImpulsiveSystem,
    bundle: &GramianBundle,
    grid: &TimeGrid,
    subspace: &ProjectionSubspace,
    alpha: f64,
    h: &Vector,
    z: &Trajectory,
    mu: &dyn Nonlinearity,
) -> Result<(Trajectory, SynthesisResult)> {
    FixedPointProblem::new(system, bundle, grid, subspace, alpha, h, mu)?.apply(z)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PicardStatus {
    Converged,
    NoConvergence { max_iter: usize, last_delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// The synthesis of the last `G_α` application.
    pub synthesis: SynthesisResult,
    pub iterations: usize,
    /// `‖z_{n+1} − z_n‖_PC` per iteration.
    pub history: Vec<f64>,
    pub status: PicardStatus,
}

impl PicardOutcome {
    pub fn converged(&self) -> bool {
        self.status == PicardStatus::Converged
    }

    pub fn into_result(self) -> Result<Self> {
        match self.status {
            PicardStatus::Converged => Ok(self),
            PicardStatus::NoConvergence { max_iter, last_delta } => Err(Error::NoConvergence { max_iter, last_delta }),
        }
    }
}

/// The initial iterate: zero controls, `μ ≡ 0`.
pub fn free_evolution(system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<Trajectory> {
    propagate(system, &ControlLaw::zero(system), grid, &ZeroForcing, None)
}

/// Damped Picard iteration from the free evolution. A `NoConvergence`
/// outcome is reported in `status`, not as an error.
pub fn picard_solve(problem: &FixedPointProblem<'_>, cfg: &PicardConfig) -> Result<PicardOutcome> {
    cfg.validate()?;
    let mut z = free_evolution(problem.system, problem.grid)?;
    if problem.mu.is_zero() {
        // G_α is constant: one application is the fixed point.
        let (image, synthesis) = problem.apply(&z)?;
        let delta = pc_norm(&image.difference(&z)?)?;
        return Ok(PicardOutcome {
            trajectory: image,
            synthesis,
            iterations: 1,
            history: alloc::vec![delta],
            status: PicardStatus::Converged,
        });
    }
    let mut history = Vec::new();
    let mut last = None;
    for n in 0..cfg.max_iter {
        let (image, synthesis) = problem.apply(&z)?;
        let next = if cfg.damping == 1.0 {
            image
        } else {
            image.blend(cfg.damping, &z)?
        };
        let delta = pc_norm(&next.difference(&z)?)?;
        history.push(delta);
        z = next;
        last = Some(synthesis);
        if !delta.is_finite() {
            break;
        }
        if delta < cfg.tol {
            return Ok(PicardOutcome {
                trajectory: z,
                synthesis: last.expect("at least one iteration ran"),
                iterations: n + 1,
                history,
                status: PicardStatus::Converged,
            });
        }
    }
    let last_delta = history.last().copied().unwrap_or(f64::NAN);
    Ok(PicardOutcome {
        trajectory: z,
        synthesis: last.expect("max_iter >= 1"),
        iterations: history.len(),
        history,
        status: PicardStatus::NoConvergence {
            max_iter: cfg.max_iter,
            last_delta,
        },
    })
}

/// Operator-norm constants of the existence argument and the smallness
/// condition, evaluated with the interval index `k = p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub m_s: f64,
    pub m_b: f64,
    pub m_d: f64,
    pub m_omega: f64,
    pub m_tilde: f64,
    /// `‖α(αI + Γ_tot)⁻¹ π_D‖`.
    pub delta: f64,
    /// `M_1 = ‖h‖ + p M_S² (1 + M_B) ‖z_0‖`.
    pub gamma_coeff: f64,
    pub m_2: f64,
    pub m_3: f64,
    pub m_4: f64,
    /// Bound on the impulse controls used inside `M_3`.
    pub m_v: f64,
    pub d_coef: f64,
    pub g_bound: f64,
    pub smallness_lhs: f64,
    pub satisfied: bool,
}

fn evolution_norm(e: &Evolution) -> f64 {
    match e {
        Evolution::Diagonal(d) => d.iter().fold(0.0, |m, x| m.max(x.abs())),
        Evolution::Dense(m) => spectral_norm(m),
    }
}

/// `max ‖S(t)‖` over every sample time of the grid.
pub fn semigroup_bound(system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<f64> {
    let mut best: f64 = 1.0; // S(0) = I
    for iv in grid.intervals() {
        for t in iv.sample_times() {
            best = best.max(evolution_norm(&system.semigroup().evolution(t)?));
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
pub fn constants_report(
    system: &ImpulsiveSystem,
    bundle: &GramianBundle,
    grid: &TimeGrid,
    subspace: &ProjectionSubspace,
    alpha: f64,
    h: &Vector,
    mu: &dyn Nonlinearity,
) -> Result<ConstantsReport> {
    let p = system.impulse_count();
    let b = system.horizon();
    let m_s = semigroup_bound(system, grid)?;
    let max_norm = |ms: &[crate::linalg::Matrix]| ms.iter().map(spectral_norm).fold(0.0, f64::max);
    let m_b = max_norm(system.jumps());
    let m_d = max_norm(system.impulse_maps());
    let m_omega = spectral_norm(system.control_map());
    let m_tilde = m_omega * (1..=p + 1).map(|k| m_s.powi(k as i32)).sum::<f64>();
    let delta = contraction_norm(&bundle.total, subspace, alpha)?;
    let growth = mu.growth();
    let d_coef = growth.d_coef();
    let g_bound = growth.g_bound();

    let pw = |m: usize| (1.0 + m_b).powi(m as i32);
    let gamma_coeff = h.norm() + p as f64 * m_s * m_s * (1.0 + m_b) * system.z0().norm();
    let m_2 = (0..=p)
        .map(|k| pw(k) * m_s.powi(k as i32 + 1) * b * g_bound)
        .sum::<f64>();
    let inverse_bound = if delta < 1.0 {
        1.0 / (alpha * (1.0 - delta))
    } else {
        f64::INFINITY
    };
    let gain = m_tilde * inverse_bound;
    // ‖v_k‖ = ‖K_kᵀ φ‖ ≤ ‖K_k‖ ‖σ‖ / (α(1 − δ)), keeping the r-independent part of ‖σ‖
    let m_v = max_norm(bundle.impulse_factors()) * gamma_coeff * inverse_bound;
    let transport: f64 = (1..=p).map(|m| pw(m) * m_s.powi(m as i32 + 1)).sum();

    let m_3 = pw(p) * m_s.powi(p as i32 + 1) * system.z0().norm()
        + transport * m_omega * b * gain * gamma_coeff
        + (1..p).map(|m| pw(m) * m_s * m_s * m_d * m_v).sum::<f64>()
        + m_s * m_d * m_v
        + gain * gamma_coeff * b;
    let m_4 = transport * m_omega * b * gain * m_2 + gain * m_2 * b + transport * b * g_bound + m_s * b * g_bound;
    let smallness_lhs = if d_coef == 0.0 { 0.0 } else { d_coef * m_4 };
    Ok(ConstantsReport {
        m_s,
        m_b,
        m_d,
        m_omega,
        m_tilde,
        delta,
        gamma_coeff,
        m_2,
        m_3,
        m_4,
        m_v,
        d_coef,
        g_bound,
        smallness_lhs,
        satisfied: smallness_lhs < 1.0,
    })
}

/// `(∫_{r1}^{r2} ‖μ(t, z(t))‖² dt, d² C_g² (r2 − r1) r²)` with `r = ‖z‖_PC`.
///
/// Panels cut by `[r1, r2]` are integrated on the clipped range with the
/// state interpolated through the panel's nodes.
pub fn l2_growth_check(
    traj: &Trajectory,
    grid: &TimeGrid,
    mu: &dyn Nonlinearity,
    g_bound: f64,
    d_coef: f64,
    r1: f64,
    r2: f64,
) -> Result<(f64, f64)> {
    if !matches!(mu.growth(), Growth::Zero | Growth::LinearGrowth { .. }) {
        return Err(Error::UnsupportedGrowthKind);
    }
    if !(r1 <= r2) {
        return Err(Error::InvalidInput(format!("empty interval [{r1}, {r2}]")));
    }
    let r = pc_norm(traj)?;
    let bound = d_coef * d_coef * g_bound * g_bound * (r2 - r1) * r * r;
    let states = traj.node_states(grid)?;
    let rule = grid.rule();
    let mut integral = 0.0;
    let mut node = 0;
    for iv in grid.intervals() {
        for panel in &iv.panels {
            let q = panel.nodes.len();
            let lo = panel.start.max(r1);
            let hi = panel.end.min(r2);
            if hi > lo {
                let values = &states[node..node + q];
                if lo == panel.start && hi == panel.end {
                    for ((t, w), z) in panel.nodes.iter().zip(&panel.weights).zip(values) {
                        let m = mu.evaluate(*t, z);
                        integral += w * m.dot(&m);
                    }
                } else {
                    let sub = rule.map_to(lo, hi);
                    let half = 0.5 * (panel.end - panel.start);
                    let mid = 0.5 * (panel.end + panel.start);
                    for (t, w) in sub.nodes.iter().zip(&sub.weights) {
                        let interp = rule.interpolation_weights((t - mid) / half);
                        let mut z = Vector::zeros(values[0].dim());
                        for (c, v) in interp.iter().zip(values) {
                            z.axpy(*c, v);
                        }
                        let m = mu.evaluate(*t, &z);
                        integral += w * m.dot(&m);
                    }
                }
            }
            node += q;
        }
    }
    Ok((integral, bound))
}
