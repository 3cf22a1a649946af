//! Mild-solution propagation with jumps.
//!
//! On each interval `[t_k, t_{k+1}]` the state is
//! `z(t) = S(t − t_k) z(t_k^+) + ∫_{t_k}^t S(t − s)[Ω u(s) + μ(s, z̄(s))] ds`
//! where `z̄` is a frozen source trajectory, and at `t_k` the jump
//! `z(t_k^+) = (I + B_k) z(t_k) + D_k v_k` is applied. Panel end states use
//! the shared quadrature nodes; states at interior nodes use a sub-rule on
//! `[panel start, node]` with the forcing interpolated through the panel's
//! nodes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridInterval, TimeGrid};
use crate::linalg::Vector;
use crate::nonlinearity::Nonlinearity;
use crate::quadrature::QuadratureRule;
use crate::system::ImpulsiveSystem;

/// Distributed part of a control law.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributedControl {
    Zero,
    /// One value per grid node, in global node order.
    Tabulated(Vec<Vector>),
    /// Adjoint-state rule: on interval `k` (between `t_k` and `t_{k+1}`),
    /// `u(s) = Ωᵀ S*(t_{k+1} − s) ψ_k` with `costates[k] = ψ_k`.
    Adjoint {
        costates: Vec<Vector>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub distributed: DistributedControl,
    /// `v_1, .., v_p`.
    pub impulses: Vec<Vector>,
}

impl ControlLaw {
    /// `u ≡ 0`, `v_k = 0`.
    pub fn zero(system: &ImpulsiveSystem) -> Self {
        ControlLaw {
            distributed: DistributedControl::Zero,
            impulses: (0..system.impulse_count())
                .map(|_| Vector::zeros(system.impulse_dim()))
                .collect(),
        }
    }

    pub fn tabulated(values: Vec<Vector>, impulses: Vec<Vector>) -> Self {
        ControlLaw {
            distributed: DistributedControl::Tabulated(values),
            impulses,
        }
    }

    pub fn validate(&self, system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<()> {
        let p = system.impulse_count();
        if self.impulses.len() != p {
            return Err(Error::dims("number of impulse controls", p, self.impulses.len()));
        }
        for v in &self.impulses {
            v.check_dim("impulse control", system.impulse_dim())?;
        }
        match &self.distributed {
            DistributedControl::Zero => {}
            DistributedControl::Tabulated(values) => {
                if values.len() != grid.node_count() {
                    return Err(Error::dims("tabulated control nodes", grid.node_count(), values.len()));
                }
                for u in values {
                    u.check_dim("control value", system.control_dim())?;
                }
            }
            DistributedControl::Adjoint { costates } => {
                if costates.len() != p + 1 {
                    return Err(Error::dims("adjoint costates", p + 1, costates.len()));
                }
                for c in costates {
                    c.check_dim("costate", system.state_dim())?;
                }
            }
        }
        Ok(())
    }

    /// `u(t)` on interval `k` for the adjoint rule.
    fn adjoint_value(system: &ImpulsiveSystem, costates: &[Vector], k: usize, t: f64) -> Result<Vector> {
        let end = system.schedule().time(k + 1);
        let adj = system.semigroup().apply_adjoint(end - t, &costates[k])?;
        Ok(system.control_map().tr_mul_vec(&adj))
    }

    /// Control values at every grid node.
    pub fn tabulate(&self, system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<Vec<Vector>> {
        self.validate(system, grid)?;
        match &self.distributed {
            DistributedControl::Zero => Ok((0..grid.node_count())
                .map(|_| Vector::zeros(system.control_dim()))
                .collect()),
            DistributedControl::Tabulated(values) => Ok(values.clone()),
            DistributedControl::Adjoint { costates } => grid
                .nodes()
                .map(|(k, t, _)| Self::adjoint_value(system, costates, k, t))
                .collect(),
        }
    }

    /// The same law with the distributed part replaced by its node table.
    pub fn to_tabulated(&self, system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<ControlLaw> {
        Ok(ControlLaw::tabulated(
            self.tabulate(system, grid)?,
            self.impulses.clone(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSamples {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
}

/// Piecewise-continuous state record. Interval `k` covers `[t_k, t_{k+1}]`;
/// its first sample is `z(t_k^+)` (or `z_0`) and its last is the left limit
/// `z(t_{k+1}) = z(t_{k+1}^-)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    intervals: Vec<IntervalSamples>,
    right_limits: Vec<Vector>,
}

impl Trajectory {
    pub fn new(intervals: Vec<IntervalSamples>, right_limits: Vec<Vector>) -> Result<Self> {
        if intervals.len() != right_limits.len() + 1 {
            return Err(Error::dims(
                "trajectory intervals",
                right_limits.len() + 1,
                intervals.len(),
            ));
        }
        for iv in &intervals {
            if iv.times.len() != iv.states.len() {
                return Err(Error::dims("interval samples", iv.times.len(), iv.states.len()));
            }
            if iv.times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput("sample times must increase strictly".into()));
            }
        }
        Ok(Trajectory {
            intervals,
            right_limits,
        })
    }

    pub fn intervals(&self) -> &[IntervalSamples] {
        &self.intervals
    }

    /// `z(t_k^+)` for `k = 1..=p` (index `k − 1`).
    pub fn right_limits(&self) -> &[Vector] {
        &self.right_limits
    }

    /// `z(t_k^-) = z(t_k)` for `k = 1..=p`.
    pub fn left_limit(&self, k: usize) -> Option<&Vector> {
        self.intervals.get(k - 1).and_then(|iv| iv.states.last())
    }

    /// `z(b)`.
    pub fn terminal(&self) -> Option<&Vector> {
        self.intervals.last().and_then(|iv| iv.states.last())
    }

    pub fn sample_count(&self) -> usize {
        self.intervals.iter().map(|iv| iv.states.len()).sum()
    }

    /// Every `(t, z(t))` sample in time order (right limits excluded; they
    /// coincide with the first sample of the following interval).
    pub fn samples(&self) -> impl Iterator<Item = (f64, &Vector)> + '_ {
        self.intervals
            .iter()
            .flat_map(|iv| iv.times.iter().copied().zip(iv.states.iter()))
    }

    fn same_layout(&self, other: &Trajectory) -> Result<()> {
        let same = self.intervals.len() == other.intervals.len()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.times == b.times);
        if same {
            Ok(())
        } else {
            Err(Error::NodeMismatch)
        }
    }

    /// `θ · self + (1 − θ) · other`, sample by sample.
    pub fn blend(&self, theta: f64, other: &Trajectory) -> Result<Trajectory> {
        self.same_layout(other)?;
        let mix = |a: &Vector, b: &Vector| {
            let mut out = a.scaled(theta);
            out.axpy(1.0 - theta, b);
            out
        };
        Ok(Trajectory {
            intervals: self
                .intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| IntervalSamples {
                    times: a.times.clone(),
                    states: a.states.iter().zip(&b.states).map(|(x, y)| mix(x, y)).collect(),
                })
                .collect(),
            right_limits: self
                .right_limits
                .iter()
                .zip(&other.right_limits)
                .map(|(x, y)| mix(x, y))
                .collect(),
        })
    }

    /// `self − other`, sample by sample.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.same_layout(other)?;
        Ok(Trajectory {
            intervals: self
                .intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| IntervalSamples {
                    times: a.times.clone(),
                    states: a.states.iter().zip(&b.states).map(|(x, y)| x - y).collect(),
                })
                .collect(),
            right_limits: self
                .right_limits
                .iter()
                .zip(&other.right_limits)
                .map(|(x, y)| x - y)
                .collect(),
        })
    }

    /// States at the quadrature nodes, in global node order.
    pub fn node_states<'a>(&'a self, grid: &TimeGrid) -> Result<Vec<&'a Vector>> {
        if self.intervals.len() != grid.intervals().len() {
            return Err(Error::NodeMismatch);
        }
        let mut out = Vec::with_capacity(grid.node_count());
        for (iv, samples) in grid.intervals().iter().zip(&self.intervals) {
            if samples.times.len() != 1 + iv.panels.iter().map(|p| p.nodes.len() + 1).sum::<usize>() {
                return Err(Error::NodeMismatch);
            }
            for (m, panel) in iv.panels.iter().enumerate() {
                for (j, t) in panel.nodes.iter().enumerate() {
                    let idx = grid.sample_index(m, j);
                    if samples.times[idx] != *t {
                        return Err(Error::NodeMismatch);
                    }
                    out.push(&samples.states[idx]);
                }
            }
        }
        Ok(out)
    }
}

/// `‖z‖_PC = sup ‖z(t)‖` over all samples and right limits.
pub fn pc_norm(traj: &Trajectory) -> Result<f64> {
    if traj.sample_count() == 0 && traj.right_limits.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let samples = traj.samples().map(|(_, z)| z.norm());
    let limits = traj.right_limits.iter().map(Vector::norm);
    Ok(samples.chain(limits).fold(0.0, f64::max))
}

/// `μ(s_j, z̄(s_j))` at every node (all zeros for `μ ≡ 0`).
pub fn frozen_forcing(
    system: &ImpulsiveSystem,
    grid: &TimeGrid,
    mu: &dyn Nonlinearity,
    mu_source: Option<&Trajectory>,
) -> Result<Vec<Vector>> {
    let n = system.state_dim();
    if mu.is_zero() {
        return Ok((0..grid.node_count()).map(|_| Vector::zeros(n)).collect());
    }
    let source = mu_source.ok_or(Error::MissingFrozenTrajectory)?;
    let states = source.node_states(grid)?;
    grid.nodes()
        .zip(states)
        .map(|((_, t, _), z)| {
            z.check_dim("frozen source state", n)?;
            let f = mu.evaluate(t, z);
            f.check_dim("nonlinearity value", n)?;
            Ok(f)
        })
        .collect()
}

// Sub-rule on [panel start, node j] and the interpolation weights that carry
// node values of the forcing to its points; identical for every panel.
struct InteriorStencil {
    // [j][l] = (fraction of (s_j − a), weight fraction, interpolation weights)
    points: Vec<Vec<(f64, f64, Vec<f64>)>>,
}

impl InteriorStencil {
    fn new(rule: &QuadratureRule) -> Self {
        let xs = rule.reference_nodes();
        let ws = rule.reference_weights();
        let points = xs
            .iter()
            .map(|&xj| {
                xs.iter()
                    .zip(ws)
                    .map(|(&xi_l, &w_l)| {
                        let frac = 0.5 * (xi_l + 1.0);
                        let reference = -1.0 + (xj + 1.0) * frac;
                        (frac, 0.5 * w_l, rule.interpolation_weights(reference))
                    })
                    .collect()
            })
            .collect();
        InteriorStencil { points }
    }
}

/// Simulates the mild solution on the grid.
pub fn propagate(
    system: &ImpulsiveSystem,
    control: &ControlLaw,
    grid: &TimeGrid,
    mu: &dyn Nonlinearity,
    mu_source: Option<&Trajectory>,
) -> Result<Trajectory> {
    control.validate(system, grid)?;
    let frozen = frozen_forcing(system, grid, mu, mu_source)?;
    let u_nodes = control.tabulate(system, grid)?;
    let omega = system.control_map();
    let adjoint = match &control.distributed {
        DistributedControl::Adjoint { costates } => Some(costates.as_slice()),
        _ => None,
    };
    let stencil = InteriorStencil::new(grid.rule());
    let sg = system.semigroup();
    let p = system.impulse_count();

    let mut intervals = Vec::with_capacity(p + 1);
    let mut right_limits = Vec::with_capacity(p);
    let mut x = system.z0().clone();

    for (k, iv) in grid.intervals().iter().enumerate() {
        let mut times = Vec::new();
        let mut states = Vec::new();
        times.push(iv.start);
        states.push(x.clone());
        let mut node = iv.first_node;
        for panel in &iv.panels {
            let q = panel.nodes.len();
            let full: Vec<Vector> = (0..q)
                .map(|j| {
                    let mut f = omega.mul_vec(&u_nodes[node + j]);
                    f += &frozen[node + j];
                    f
                })
                .collect();
            // Interpolated part: everything except an exactly evaluable control.
            let smooth: Vec<Vector> = if adjoint.is_some() {
                frozen[node..node + q].to_vec()
            } else {
                full.clone()
            };

            let a = panel.start;
            for (j, &sj) in panel.nodes.iter().enumerate() {
                let span = sj - a;
                let mut z = sg.apply(span, &x)?;
                for (frac, wfrac, interp) in &stencil.points[j] {
                    let r = a + span * frac;
                    let mut f = Vector::zeros(x.dim());
                    for (c, g) in interp.iter().zip(&smooth) {
                        f.axpy(*c, g);
                    }
                    if let Some(costates) = adjoint {
                        let u = ControlLaw::adjoint_value(system, costates, k, r)?;
                        f += &omega.mul_vec(&u);
                    }
                    z.axpy(span * wfrac, &sg.apply(sj - r, &f)?);
                }
                times.push(sj);
                states.push(z);
            }

            let mut end = sg.apply(panel.end - a, &x)?;
            for ((&sj, &wj), f) in panel.nodes.iter().zip(&panel.weights).zip(&full) {
                end.axpy(wj, &sg.apply(panel.end - sj, f)?);
            }
            times.push(panel.end);
            states.push(end.clone());
            x = end;
            node += q;
        }
        intervals.push(IntervalSamples { times, states });
        if k < p {
            x = system.apply_jump(k + 1, &x, &control.impulses[k]);
            right_limits.push(x.clone());
        }
    }
    Trajectory::new(intervals, right_limits)
}

/// `∫_{t_{k}}^{t_{k+1}} S(t_{k+1} − s) f(s) ds` on the grid nodes of
/// interval `k`, with `f` given at the interval's nodes.
pub(crate) fn interval_duhamel(system: &ImpulsiveSystem, iv: &GridInterval, values: &[Vector]) -> Result<Vector> {
    let sg = system.semigroup();
    let mut acc = Vector::zeros(system.state_dim());
    for ((s, w), f) in iv.nodes().zip(values) {
        acc.axpy(w, &sg.apply(iv.end - s, f)?);
    }
    Ok(acc)
}

/// `z(t_k^+)` from the fully expanded closed form: transported initial
/// state, transported distributed-control and `μ` integrals, transported
/// impulse controls `v_1..v_{k−1}` and the untransported `D_k v_k`.
pub fn right_limit_unrolled(
    system: &ImpulsiveSystem,
    control: &ControlLaw,
    grid: &TimeGrid,
    mu: &dyn Nonlinearity,
    mu_source: Option<&Trajectory>,
    k: usize,
) -> Result<Vector> {
    let p = system.impulse_count();
    if k == 0 || k > p {
        return Err(Error::IndexOutOfRange { index: k, max: p });
    }
    control.validate(system, grid)?;
    let frozen = frozen_forcing(system, grid, mu, mu_source)?;
    let u_nodes = control.tabulate(system, grid)?;
    let sched = system.schedule();
    let sg = system.semigroup();
    // (I + B_j) S(t_j − t_{j−1})
    let step = |j: usize, v: &Vector| -> Result<Vector> {
        let moved = sg.apply(sched.time(j) - sched.time(j - 1), v)?;
        Ok(system.apply_jump(j, &moved, &Vector::zeros(system.impulse_dim())))
    };
    // ∏_{j=k}^{from} (I + B_j) S(t_j − t_{j−1}) applied to v
    let transport = |from: usize, v: Vector| -> Result<Vector> {
        let mut out = v;
        for j in from..=k {
            out = step(j, &out)?;
        }
        Ok(out)
    };

    let mut total = transport(1, system.z0().clone())?;

    for i in 1..=k {
        let iv = grid.interval(i - 1);
        let count = iv.node_count();
        let forcing: Vec<Vector> = (iv.first_node..iv.first_node + count)
            .map(|j| {
                let mut f = system.control_map().mul_vec(&u_nodes[j]);
                f += &frozen[j];
                f
            })
            .collect();
        let integral = interval_duhamel(system, iv, &forcing)?;
        let jumped = system.apply_jump(i, &integral, &Vector::zeros(system.impulse_dim()));
        total += &transport(i + 1, jumped)?;
    }

    for i in 2..=k {
        let injected = system.impulse_map(i - 1).mul_vec(&control.impulses[i - 2]);
        total += &transport(i, injected)?;
    }
    total += &system.impulse_map(k).mul_vec(&control.impulses[k - 1]);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nonlinearity::ZeroForcing;
    use crate::semigroup::Semigroup;
    use crate::system::ImpulseSchedule;
    use alloc::vec;

    fn scalar(b1: f64, d1: f64, z0: f64) -> ImpulsiveSystem {
        ImpulsiveSystem::new(
            Semigroup::spectral(vec![1.0]),
            Matrix::identity(1),
            vec![Matrix::from_diag(&[b1])],
            vec![Matrix::from_diag(&[d1])],
            Vector::from(vec![z0]),
            ImpulseSchedule::new(vec![0.5], 1.0).unwrap(),
        )
        .unwrap()
    }

    fn grid(sys: &ImpulsiveSystem) -> TimeGrid {
        TimeGrid::new(sys.schedule(), &QuadratureRule::default())
    }

    #[test]
    fn impulse_free_decay() {
        let sys = scalar(0.0, 0.0, 1.0);
        let g = grid(&sys);
        let traj = propagate(&sys, &ControlLaw::zero(&sys), &g, &ZeroForcing, None).unwrap();
        assert!((traj.terminal().unwrap()[0] - (-1.0f64).exp()).abs() < 1e-15);
        // sup of e^{−t} on [0, 1] is attained at t = 0
        assert_eq!(pc_norm(&traj).unwrap(), 1.0);
        for (t, z) in traj.samples() {
            assert!((z[0] - (-t).exp()).abs() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn annihilating_jump_leaves_impulse() {
        let sys = scalar(-1.0, 1.0, 0.7);
        let g = grid(&sys);
        let control = ControlLaw {
            distributed: DistributedControl::Zero,
            impulses: vec![Vector::from(vec![-0.3])],
        };
        let traj = propagate(&sys, &control, &g, &ZeroForcing, None).unwrap();
        assert!((traj.right_limits()[0][0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_dynamics_stay_zero() {
        let sys = scalar(0.4, 1.0, 0.0);
        let g = grid(&sys);
        let traj = propagate(&sys, &ControlLaw::zero(&sys), &g, &ZeroForcing, None).unwrap();
        assert_eq!(pc_norm(&traj).unwrap(), 0.0);
    }

    #[test]
    fn unrolled_at_k1() {
        let sys = scalar(0.5, 1.0, 2.0);
        let g = grid(&sys);
        let z = right_limit_unrolled(&sys, &ControlLaw::zero(&sys), &g, &ZeroForcing, None, 1).unwrap();
        // (I + B_1) S(t_1) z0
        assert!((z[0] - 1.5 * (-0.5f64).exp() * 2.0).abs() < 1e-15);
        let only_impulse = ControlLaw {
            distributed: DistributedControl::Zero,
            impulses: vec![Vector::from(vec![0.25])],
        };
        let sys0 = scalar(0.5, 2.0, 0.0);
        let z = right_limit_unrolled(&sys0, &only_impulse, &g, &ZeroForcing, None, 1).unwrap();
        assert_eq!(z[0], 0.5);
        assert!(matches!(
            right_limit_unrolled(&sys0, &only_impulse, &g, &ZeroForcing, None, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn nonzero_forcing_needs_source() {
        let sys = scalar(0.0, 0.0, 1.0);
        let g = grid(&sys);
        let mu = crate::nonlinearity::Saturation { scale: 0.1 };
        assert_eq!(
            propagate(&sys, &ControlLaw::zero(&sys), &g, &mu, None),
            Err(Error::MissingFrozenTrajectory)
        );
    }

    #[test]
    fn constant_forcing_matches_closed_form() {
        // z' = −z + 1, z(0) = 0  =>  z(t) = 1 − e^{−t}
        let sys = scalar(0.0, 0.0, 0.0);
        let g = grid(&sys);
        let ones = (0..g.node_count()).map(|_| Vector::from(vec![1.0])).collect();
        let control = ControlLaw::tabulated(ones, vec![Vector::zeros(1)]);
        let traj = propagate(&sys, &control, &g, &ZeroForcing, None).unwrap();
        for (t, z) in traj.samples() {
            assert!((z[0] - (1.0 - (-t).exp())).abs() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn empty_trajectory_norm() {
        let t = Trajectory::new(
            vec![IntervalSamples {
                times: vec![],
                states: vec![],
            }],
            vec![],
        )
        .unwrap();
        assert_eq!(pc_norm(&t), Err(Error::EmptyTrajectory));
    }
}
