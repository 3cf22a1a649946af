//! Heat testbed invariants over the supported truncations.

use impulse_fac_core::gramian::{assemble, closed_form_bundle};
use impulse_fac_core::heat::{
    alpha_sweep, build_heat, build_subspace, build_target, EigenConvention, HeatConfig, SweepContext, TargetKind,
};
use impulse_fac_core::linalg::smallest_eigenvalue_sym;
use impulse_fac_core::nonlinearity::ZeroForcing;
use impulse_fac_core::semilinear::PicardConfig;
use impulse_fac_core::{ImpulseSchedule, TimeGrid, Vector};

fn config(modes: usize, impulses: usize, convention: EigenConvention) -> HeatConfig {
    let times = (1..=impulses).map(|k| k as f64 / (impulses + 1) as f64).collect();
    HeatConfig {
        modes,
        schedule: ImpulseSchedule::new(times, 1.0).unwrap(),
        convention,
        z0: None,
    }
}

#[test]
fn total_is_strictly_positive() {
    for convention in [EigenConvention::Dirichlet, EigenConvention::PaperLiteral] {
        for modes in [2, 4, 8, 16, 32] {
            for impulses in 0..=2 {
                let cfg = config(modes, impulses, convention);
                let sys = build_heat(&cfg).unwrap();
                let grid = TimeGrid::new(sys.schedule(), &cfg.quadrature(20, 1).unwrap());
                let quad = assemble(&sys, &grid).unwrap();
                let closed = closed_form_bundle(&sys).unwrap();
                for total in [&quad.total, &closed.total] {
                    let lmin = smallest_eigenvalue_sym(total).unwrap();
                    assert!(lmin > 0.0, "{convention:?} N={modes} p={impulses}: {lmin}");
                }
            }
        }
    }
}

#[test]
fn sweep_reaches_free_evolution_target_exactly() {
    // With the resetting jumps the free final state is 0, so h = F z0 = 0 needs no control.
    let cfg = HeatConfig::standard(16, 1.0).unwrap();
    let sys = build_heat(&cfg).unwrap();
    let grid = TimeGrid::new(sys.schedule(), &cfg.quadrature(20, 1).unwrap());
    let bundle = assemble(&sys, &grid).unwrap();
    let h = bundle.free_map().mul_vec(sys.z0());
    let p = build_subspace(4, 16).unwrap();
    let ctx = SweepContext::new(&sys, &bundle, &grid, &p, &h, &ZeroForcing, PicardConfig::default()).unwrap();
    for row in alpha_sweep(&ctx, &[1.0, 1e-2, 1e-4]).unwrap() {
        assert_eq!(row.residual_norm, 0.0, "{row:?}");
    }
}

#[test]
fn heat_sweep_decreases_over_seven_decades() {
    let cfg = HeatConfig::standard(32, 1.0).unwrap();
    let sys = build_heat(&cfg).unwrap();
    let grid = TimeGrid::new(sys.schedule(), &cfg.quadrature(20, 1).unwrap());
    let bundle = assemble(&sys, &grid).unwrap();
    let h = build_target(TargetKind::Eigenmode(5), 32).unwrap();
    let p = build_subspace(4, 32).unwrap();
    let ctx = SweepContext::new(&sys, &bundle, &grid, &p, &h, &ZeroForcing, PicardConfig::default()).unwrap();
    let alphas: Vec<f64> = (0..=6).map(|k| 10f64.powi(-k)).collect();
    let rows = alpha_sweep(&ctx, &alphas).unwrap();
    let scale = 1.0 + h.norm();
    for pair in rows.windows(2) {
        assert!(pair[1].residual_norm < pair[0].residual_norm);
    }
    for row in &rows {
        assert!(row.projected_residual_norm <= 1e-10 * scale, "{row:?}");
    }
    assert!(rows[6].residual_norm <= 1e-3 * rows[0].residual_norm);
    assert_eq!(Vector::unit(32, 4), h);
}
