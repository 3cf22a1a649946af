//! Linear finite-approximate control synthesis.
//!
//! For a target `h` and `σ = h − F z_0`, the costate
//! `φ = (α(I − π_D) + Γ_tot)⁻¹ σ` minimizes
//! `J_α(φ) = ½⟨Γ_tot φ, φ⟩ + (α/2)⟨(I − π_D)φ, φ⟩ − ⟨φ, σ⟩`
//! (the sign is flipped relative to the usual `φ_min`). The controls are
//! `(u, v) = M* φ` and the terminal residual is
//! `z(b) − h = −α(I − π_D)φ`, which vanishes on `D`.

use alloc::vec::Vec;

use crate::error::Result;
use crate::gramian::GramianBundle;
use crate::grid::TimeGrid;
use crate::linalg::{Matrix, ProjectionSubspace, Vector};
use crate::nonlinearity::ZeroForcing;
use crate::resolvent::Resolvent;
use crate::system::ImpulsiveSystem;
use crate::trajectory::{propagate, ControlLaw, DistributedControl, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub alpha: f64,
    pub phi: Vector,
    pub control: ControlLaw,
    pub sigma: Vector,
    pub target: Vector,
    /// `−α(I − π_D)φ`, the terminal residual `z(b) − h` this control produces.
    pub predicted_residual: Vector,
}

/// `σ = h − F z_0`.
pub fn sigma_linear(system: &ImpulsiveSystem, bundle: &GramianBundle, h: &Vector) -> Result<Vector> {
    h.check_dim("target", system.state_dim())?;
    Ok(h - &bundle.free_map().mul_vec(system.z0()))
}

/// The control pair generated by the costate `φ`.
pub fn adjoint_control(bundle: &GramianBundle, phi: &Vector) -> ControlLaw {
    ControlLaw {
        distributed: DistributedControl::Adjoint {
            costates: bundle.costates(phi),
        },
        impulses: bundle.impulse_controls(phi),
    }
}

/// Solves for `φ` given an already-formed `σ`.
pub fn synthesize_from_sigma(
    bundle: &GramianBundle,
    resolvent: &Resolvent,
    subspace: &ProjectionSubspace,
    h: &Vector,
    sigma: Vector,
) -> Result<SynthesisResult> {
    let phi = resolvent.solve_direct(&sigma)?;
    let alpha = resolvent.alpha();
    let predicted_residual = subspace.complement(&phi)?.scaled(-alpha);
    Ok(SynthesisResult {
        alpha,
        control: adjoint_control(bundle, &phi),
        phi,
        sigma,
        target: h.clone(),
        predicted_residual,
    })
}

pub fn synthesize(
    system: &ImpulsiveSystem,
    bundle: &GramianBundle,
    subspace: &ProjectionSubspace,
    alpha: f64,
    h: &Vector,
) -> Result<SynthesisResult> {
    let sigma = sigma_linear(system, bundle, h)?;
    let resolvent = Resolvent::new(&bundle.total, subspace, alpha)?;
    synthesize_from_sigma(bundle, &resolvent, subspace, h, sigma)
}

/// `(J_α(φ), ∇J_α(φ))`.
pub fn cost_and_gradient(
    total: &Matrix,
    subspace: &ProjectionSubspace,
    alpha: f64,
    phi: &Vector,
    sigma: &Vector,
) -> Result<(f64, Vector)> {
    phi.check_dim("costate", total.rows())?;
    sigma.check_dim("sigma", total.rows())?;
    let t_phi = total.mul_vec(phi);
    let c_phi = subspace.complement(phi)?;
    let cost = 0.5 * t_phi.dot(phi) + 0.5 * alpha * c_phi.dot(phi) - phi.dot(sigma);
    let mut grad = t_phi;
    grad.axpy(alpha, &c_phi);
    grad -= sigma;
    Ok((cost, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCheck {
    /// `‖z(b) − h − predicted‖`.
    pub identity_error: f64,
    /// `‖π_D(z(b) − h)‖`.
    pub projected: f64,
    /// `‖z(b) − h‖`.
    pub residual: f64,
    pub trajectory: Trajectory,
}

/// Simulates the synthesized control (with `μ ≡ 0`) and compares the
/// terminal residual against the prediction.
pub fn verify_residual(
    system: &ImpulsiveSystem,
    subspace: &ProjectionSubspace,
    result: &SynthesisResult,
    grid: &TimeGrid,
) -> Result<ResidualCheck> {
    let trajectory = propagate(system, &result.control, grid, &ZeroForcing, None)?;
    let terminal = trajectory.terminal().ok_or(crate::Error::EmptyTrajectory)?;
    let residual = terminal - &result.target;
    Ok(ResidualCheck {
        identity_error: (&residual - &result.predicted_residual).norm(),
        projected: subspace.project(&residual)?.norm(),
        residual: residual.norm(),
        trajectory,
    })
}

/// Synthesizes along a list of `α` values sharing one Gramian.
pub fn synthesize_sweep(
    system: &ImpulsiveSystem,
    bundle: &GramianBundle,
    subspace: &ProjectionSubspace,
    alphas: &[f64],
    h: &Vector,
) -> Vec<Result<SynthesisResult>> {
    alphas
        .iter()
        .map(|&a| synthesize(system, bundle, subspace, a, h))
        .collect()
}
