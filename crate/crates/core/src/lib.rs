//! Finite-approximate control synthesis for impulsive evolution systems.
//!
//! The crate works on finite-dimensional truncations of
//!
//! ```text
//! z'(t) = A z(t) + Ω u(t) + μ(t, z(t)),      t ∈ [0, b] \ {t_1, .., t_p}
//! z(t_k^+) = (I + B_k) z(t_k) + D_k v_k,     k = 1, .., p
//! z(0) = z_0
//! ```
//!
//! It assembles the impulsive controllability Gramian `Γ + Γ̃ + Θ + Θ̃`,
//! inverts the resolvent-like operator `α(I − π_D) + Γ_tot`, synthesizes the
//! control pair `(u_α, {v_k})` that reaches `h` approximately while matching
//! `π_D h` exactly, and runs a Picard iteration for semilinear systems.
//!
//! Everything here is pure computation on `alloc` collections; IO, config
//! files and the CLI live in the `impulse-fac` crate.
//!
//! ```
//! use impulse_fac_core::gramian::assemble;
//! use impulse_fac_core::heat::{build_heat, build_subspace, build_target, HeatConfig, TargetKind};
//! use impulse_fac_core::synthesis::{synthesize, verify_residual};
//! use impulse_fac_core::TimeGrid;
//!
//! let cfg = HeatConfig::standard(16, 1.0)?;
//! let system = build_heat(&cfg)?;
//! let grid = TimeGrid::new(system.schedule(), &cfg.quadrature(20, 1)?);
//! let bundle = assemble(&system, &grid)?;
//!
//! let d = build_subspace(4, 16)?;
//! let h = build_target(TargetKind::Eigenmode(5), 16)?;
//! let result = synthesize(&system, &bundle, &d, 1e-4, &h)?;
//! let check = verify_residual(&system, &d, &result, &grid)?;
//! assert!(check.projected < 1e-12);
//! assert!(check.identity_error < 1e-12);
//! # Ok::<(), impulse_fac_core::Error>(())
//! ```
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod expm;
pub mod gramian;
pub mod grid;
pub mod heat;
pub mod linalg;
pub mod nonlinearity;
pub mod quadrature;
pub mod resolvent;
pub mod sample;
pub mod semigroup;
pub mod semilinear;
pub mod synthesis;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use gramian::GramianBundle;
pub use grid::TimeGrid;
pub use linalg::{Matrix, ProjectionSubspace, Vector};
pub use nonlinearity::{Growth, Nonlinearity};
pub use quadrature::QuadratureRule;
pub use semigroup::Semigroup;
pub use synthesis::SynthesisResult;
pub use system::{ImpulseSchedule, ImpulsiveSystem};
pub use trajectory::{ControlLaw, Trajectory};
