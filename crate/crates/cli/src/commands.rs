//! The pipeline stages behind each subcommand, returning serializable reports.

use impulse_fac_core::gramian::closed_form_bundle;
use impulse_fac_core::heat::{SweepContext, SweepRow};
use impulse_fac_core::linalg::{largest_eigenvalue_sym, relative_frobenius, smallest_eigenvalue_sym};
use impulse_fac_core::resolvent::Resolvent;
use impulse_fac_core::semilinear::{constants_report, picard_solve, ConstantsReport, FixedPointProblem, PicardStatus};
use impulse_fac_core::synthesis::{synthesize, verify_residual};
use impulse_fac_core::trajectory::{pc_norm, propagate};
use impulse_fac_core::{ControlLaw, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Problem;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct BlockNorms {
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub theta: f64,
    pub theta_tilde: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramianReport {
    pub state_dim: usize,
    pub impulses: usize,
    pub quadrature_nodes: usize,
    /// Frobenius norms.
    pub blocks: BlockNorms,
    pub total_min_eig: f64,
    pub total_max_eig: f64,
    /// Relative Frobenius distance to the closed-form Gramian (spectral systems only).
    pub oracle_deviation: Option<f64>,
    pub total: Vec<Vec<f64>>,
}

pub fn gramian(problem: &Problem) -> Result<GramianReport, CliError> {
    let b = &problem.bundle;
    let oracle_deviation = if problem.system.semigroup().is_spectral() {
        Some(relative_frobenius(
            &b.total,
            &closed_form_bundle(&problem.system)?.total,
        ))
    } else {
        None
    };
    Ok(GramianReport {
        state_dim: problem.system.state_dim(),
        impulses: problem.system.impulse_count(),
        quadrature_nodes: problem.grid.node_count(),
        blocks: BlockNorms {
            gamma: b.gamma.frobenius_norm(),
            gamma_tilde: b.gamma_tilde.frobenius_norm(),
            theta: b.theta.frobenius_norm(),
            theta_tilde: b.theta_tilde.frobenius_norm(),
            total: b.total.frobenius_norm(),
        },
        total_min_eig: smallest_eigenvalue_sym(&b.total)?,
        total_max_eig: largest_eigenvalue_sym(&b.total)?,
        oracle_deviation,
        total: b.total.to_rows(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    pub alpha: f64,
    pub residual_norm: f64,
    pub projected_residual_norm: f64,
    pub predicted_residual_norm: f64,
    /// `‖simulated residual − predicted residual‖`.
    pub identity_error: f64,
    pub contraction_norm: f64,
    pub phi: Vec<f64>,
    pub impulse_controls: Vec<Vec<f64>>,
}

/// Linear synthesis at each `α`; the nonlinearity is ignored.
pub fn synthesize_all(problem: &Problem, alphas: &[f64]) -> Result<Vec<SynthesisReport>, CliError> {
    alphas
        .iter()
        .map(|&alpha| {
            let res = synthesize(
                &problem.system,
                &problem.bundle,
                &problem.subspace,
                alpha,
                &problem.target,
            )?;
            let check = verify_residual(&problem.system, &problem.subspace, &res, &problem.grid)?;
            let contraction = Resolvent::new(&problem.bundle.total, &problem.subspace, alpha)?.contraction_norm();
            Ok(SynthesisReport {
                alpha,
                residual_norm: check.residual,
                projected_residual_norm: check.projected,
                predicted_residual_norm: res.predicted_residual.norm(),
                identity_error: check.identity_error,
                contraction_norm: contraction,
                phi: res.phi.into_inner(),
                impulse_controls: res.control.impulses.into_iter().map(|v| v.into_inner()).collect(),
            })
        })
        .collect()
}

/// The controlled trajectory at `α` (Picard fixed point when `μ ≠ 0`), or
/// the free evolution when `alpha` is `None`.
pub fn simulate(problem: &Problem, alpha: Option<f64>) -> Result<Trajectory, CliError> {
    let sys = &problem.system;
    let Some(alpha) = alpha else {
        let traj = if problem.mu.is_zero() {
            propagate(sys, &ControlLaw::zero(sys), &problem.grid, problem.mu.as_ref(), None)?
        } else {
            impulse_fac_core::semilinear::free_evolution(sys, &problem.grid)?
        };
        return Ok(traj);
    };
    let fp = fixed_point_problem(problem, alpha)?;
    Ok(picard_solve(&fp, &problem.picard)?.trajectory)
}

/// Columns `interval, t, z_1, .., z_N`. The first row of each interval after
/// the first is the right limit at the impulse.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String, CliError> {
    let n = traj.terminal().map_or(0, |z| z.dim());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::from("interval"), String::from("t")];
    header.extend((1..=n).map(|i| format!("z_{i}")));
    write_record(&mut w, &header)?;
    for (k, iv) in traj.intervals().iter().enumerate() {
        for (t, z) in iv.times.iter().zip(&iv.states) {
            let mut rec = vec![k.to_string(), fmt(*t)];
            rec.extend(z.as_slice().iter().map(|x| fmt(*x)));
            write_record(&mut w, &rec)?;
        }
    }
    finish(w)
}

fn fixed_point_problem(problem: &Problem, alpha: f64) -> Result<FixedPointProblem<'_>, CliError> {
    Ok(FixedPointProblem::new(
        &problem.system,
        &problem.bundle,
        &problem.grid,
        &problem.subspace,
        alpha,
        &problem.target,
        problem.mu.as_ref(),
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub m_s: f64,
    pub m_b: f64,
    pub m_d: f64,
    pub m_omega: f64,
    pub m_tilde: f64,
    pub delta: f64,
    pub gamma_coeff: f64,
    pub m_2: f64,
    pub m_3: f64,
    pub m_4: f64,
    pub m_v: f64,
    pub d_coef: f64,
    pub g_bound: f64,
    pub smallness_lhs: f64,
    pub satisfied: bool,
}

impl From<ConstantsReport> for Constants {
    fn from(c: ConstantsReport) -> Self {
        Constants {
            m_s: c.m_s,
            m_b: c.m_b,
            m_d: c.m_d,
            m_omega: c.m_omega,
            m_tilde: c.m_tilde,
            delta: c.delta,
            gamma_coeff: c.gamma_coeff,
            m_2: c.m_2,
            m_3: c.m_3,
            m_4: c.m_4,
            m_v: c.m_v,
            d_coef: c.d_coef,
            g_bound: c.g_bound,
            smallness_lhs: c.smallness_lhs,
            satisfied: c.satisfied,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SemilinearReport {
    pub alpha: f64,
    pub status: String,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub residual_norm: f64,
    pub projected_residual_norm: f64,
    /// `‖G_α(z) − z‖_PC` at the returned iterate.
    pub fixed_point_residual: f64,
    /// `‖z(b) − h + α(I − π_D)R(α)σ_α(z)‖` at the returned iterate.
    pub identity_error: f64,
    pub constants: Constants,
}

pub fn semilinear_one(problem: &Problem, alpha: f64) -> Result<SemilinearReport, CliError> {
    let fp = fixed_point_problem(problem, alpha)?;
    let outcome = picard_solve(&fp, &problem.picard)?;
    let z = &outcome.trajectory;
    let (image, _) = fp.apply(z)?;
    let terminal = z.terminal().ok_or(impulse_fac_core::Error::EmptyTrajectory)?;
    let residual = terminal - &problem.target;
    let constants = constants_report(
        &problem.system,
        &problem.bundle,
        &problem.grid,
        &problem.subspace,
        alpha,
        &problem.target,
        problem.mu.as_ref(),
    )?;
    Ok(SemilinearReport {
        alpha,
        status: match outcome.status {
            PicardStatus::Converged => "ok".into(),
            PicardStatus::NoConvergence { .. } => "no_convergence".into(),
        },
        iterations: outcome.iterations,
        history: outcome.history.clone(),
        residual_norm: residual.norm(),
        projected_residual_norm: problem.subspace.project(&residual)?.norm(),
        fixed_point_residual: pc_norm(&image.difference(z)?)?,
        identity_error: fp.terminal_identity_error(z)?,
        constants: constants.into(),
    })
}

pub fn semilinear(problem: &Problem, alphas: &[f64], threads: usize) -> Result<Vec<SemilinearReport>, CliError> {
    in_pool(threads, || {
        alphas.par_iter().map(|&a| semilinear_one(problem, a)).collect()
    })
}

/// Worker count: `requested` (or all cores), capped by `IMPULSE_FAC_THREADS`.
pub fn worker_count(requested: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var("IMPULSE_FAC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = requested.unwrap_or(available);
    cap.map_or(n, |c| n.min(c)).max(1)
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// One row per `α`, computed in parallel and returned in input order.
pub fn sweep(problem: &Problem, alphas: &[f64], threads: usize) -> Result<Vec<SweepRow>, CliError> {
    impulse_fac_core::heat::check_alphas(alphas).map_err(|e| CliError::Config {
        path: "alphas".into(),
        message: e.to_string(),
    })?;
    let ctx = SweepContext::new(
        &problem.system,
        &problem.bundle,
        &problem.grid,
        &problem.subspace,
        &problem.target,
        problem.mu.as_ref(),
        problem.picard,
    )?;
    Ok(in_pool(threads, || alphas.par_iter().map(|&a| ctx.row(a)).collect()))
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "alpha",
    "residual_norm",
    "projected_residual_norm",
    "predicted_residual_norm",
    "picard_iterations",
    "delta",
    "total_min_eig",
    "status",
];

/// Shortest round-trip decimal form, so output bytes depend only on the values.
fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn write_record(w: &mut csv::Writer<Vec<u8>>, rec: &[String]) -> Result<(), CliError> {
    w.write_record(rec).map_err(csv_error)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Output {
        path: "(csv buffer)".into(),
        source: std::io::Error::other(e),
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS).map_err(csv_error)?;
    for r in rows {
        write_record(
            &mut w,
            &[
                fmt(r.alpha),
                fmt(r.residual_norm),
                fmt(r.projected_residual_norm),
                fmt(r.predicted_residual_norm),
                r.picard_iterations.to_string(),
                r.delta.map(fmt).unwrap_or_default(),
                fmt(r.total_min_eig),
                r.status.clone(),
            ],
        )?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::load_fixture;

    #[test]
    fn scalar_gramian_report() {
        let problem = load_fixture("scalar-p1").unwrap().config.build().unwrap();
        let r = gramian(&problem).unwrap();
        assert!((r.total[0][0] - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!(r.oracle_deviation.unwrap() < 1e-14);
        assert_eq!(r.blocks.gamma_tilde, 0.0);
    }

    #[test]
    fn csv_header_and_order() {
        let problem = load_fixture("scalar-p1").unwrap().config.build().unwrap();
        let rows = sweep(&problem, &[1.0, 0.1], 2).unwrap();
        let text = sweep_csv(&rows).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_COLUMNS.join(","));
        assert!(lines.next().unwrap().starts_with("1e0,"));
        assert!(lines.next().unwrap().starts_with("1e-1,"));
        // D = {0}: the delta column is empty
        assert!(text.lines().nth(1).unwrap().contains(",,"));
    }

    #[test]
    fn trajectory_table() {
        let problem = load_fixture("scalar-p1").unwrap().config.build().unwrap();
        let traj = simulate(&problem, None).unwrap();
        let text = trajectory_csv(&traj).unwrap();
        assert!(text.starts_with("interval,t,z_1\n0,0e0,1e0\n"));
        let last = text.lines().last().unwrap();
        let z: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
        assert!((z - (-1.0f64).exp()).abs() < 1e-14);
    }
}
