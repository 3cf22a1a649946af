//! Every expected value shipped with a fixture is reproduced by the pipeline.

use impulse_fac::{list_fixtures, load_fixture, Problem};
use impulse_fac_core::linalg::smallest_eigenvalue_sym;
use impulse_fac_core::resolvent::contraction_norm;
use impulse_fac_core::semilinear::constants_report;
use impulse_fac_core::synthesis::{synthesize, verify_residual};
use impulse_fac_core::ProjectionSubspace;

fn measure(p: &Problem, quantity: &str) -> f64 {
    let (name, alpha) = match quantity.split_once('@') {
        Some((n, a)) => (n, a.parse::<f64>().ok()),
        None => (quantity, None),
    };
    let scalar = |m: &impulse_fac_core::Matrix| {
        assert_eq!(m.rows(), 1, "{quantity} is only defined for scalar systems");
        m[(0, 0)]
    };
    let constants = || {
        let b = &p.bundle;
        constants_report(
            &p.system,
            b,
            &p.grid,
            &p.subspace,
            p.config.alphas[0],
            &p.target,
            p.mu.as_ref(),
        )
        .unwrap()
    };
    match name {
        "gamma" => scalar(&p.bundle.gamma),
        "theta" => scalar(&p.bundle.theta),
        "total" => scalar(&p.bundle.total),
        "total_min_eig" => smallest_eigenvalue_sym(&p.bundle.total).unwrap(),
        "residual_norm" => {
            let res = synthesize(&p.system, &p.bundle, &p.subspace, alpha.unwrap(), &p.target).unwrap();
            verify_residual(&p.system, &p.subspace, &res, &p.grid).unwrap().residual
        }
        "contraction_norm" => {
            let full = ProjectionSubspace::full(p.system.state_dim());
            contraction_norm(&p.bundle.total, &full, alpha.unwrap()).unwrap()
        }
        "smallness_lhs" => constants().smallness_lhs,
        "satisfied" => f64::from(u8::from(constants().satisfied)),
        other => panic!("no evaluator for {other}"),
    }
}

#[test]
fn expectations_hold() {
    for name in list_fixtures() {
        let fixture = load_fixture(name).unwrap();
        let problem = fixture.config.clone().build().unwrap();
        assert!(!fixture.expected.is_empty(), "{name}");
        for e in &fixture.expected {
            let measured = measure(&problem, &e.quantity);
            assert!(
                e.holds(measured),
                "{name} {}: measured {measured:e}, expected {:e} ± {:e}",
                e.quantity,
                e.value,
                e.tolerance
            );
        }
    }
}
