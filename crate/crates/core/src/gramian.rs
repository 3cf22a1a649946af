//! Impulsive controllability Gramian and the input-to-terminal-state map.
//!
//! With `T_p = S(b − t_p)` and `T_i = T_{i+1} (I + B_{i+1}) S(t_{i+1} − t_i)`,
//! the transport factors are
//!
//! ```text
//! L_i = T_i (I + B_i)   (i = 1..p),    L_{p+1} = I
//! K_k = T_k D_k         (k = 1..p)
//! F   = L_1 S(t_1)      (S(b) when p = 0)
//! ```
//!
//! and, with `G_i = ∫_{t_{i−1}}^{t_i} S(t_i − s) Ω Ωᵀ S(t_i − s)ᵀ ds`,
//!
//! ```text
//! Γ = G_{p+1},  Θ = Σ_{i≤p} L_i G_i L_iᵀ,  Γ̃ = K_p K_pᵀ,  Θ̃ = Σ_{k<p} K_k K_kᵀ.
//! ```
//!
//! `M(u, v) = Σ_i L_i ∫ S(t_i − s) Ω u(s) ds + Σ_k K_k v_k`, and with the
//! quadrature-weighted inner product on controls `M M* = Γ + Γ̃ + Θ + Θ̃`
//! holds to rounding. See `docs/conventions.md` for the index conventions.

use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{GridInterval, TimeGrid};
use crate::linalg::{Matrix, Vector};
use crate::semigroup::Semigroup;
use crate::system::ImpulsiveSystem;

/// `L_i`, `K_k` and `F` for one system.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportFactors {
    /// `L_1, .., L_p` (the tail factor `L_{p+1} = I` is implicit).
    pub left: Vec<Matrix>,
    /// `K_1, .., K_p`.
    pub impulse: Vec<Matrix>,
    pub free_map: Matrix,
}

impl TransportFactors {
    pub fn new(system: &ImpulsiveSystem) -> Result<Self> {
        let p = system.impulse_count();
        let sched = system.schedule();
        let sg = system.semigroup();
        let b = sched.horizon();
        if p == 0 {
            return Ok(TransportFactors {
                left: Vec::new(),
                impulse: Vec::new(),
                free_map: sg.operator_matrix(b)?,
            });
        }
        let mut left = alloc::vec![Matrix::zeros(0, 0); p];
        let mut impulse = alloc::vec![Matrix::zeros(0, 0); p];
        let mut t = sg.operator_matrix(b - sched.time(p))?;
        for i in (1..=p).rev() {
            let l = t.matmul(&system.jump_operator(i));
            impulse[i - 1] = t.matmul(system.impulse_map(i));
            if i > 1 {
                let step = sg.evolution(sched.time(i) - sched.time(i - 1))?;
                t = step.right_mul(&l);
            }
            left[i - 1] = l;
        }
        let free_map = sg.evolution(sched.time(1))?.right_mul(&left[0]);
        Ok(TransportFactors {
            left,
            impulse,
            free_map,
        })
    }

    /// `L_i` for `i = 1..=p+1`.
    pub fn left_factor(&self, i: usize) -> Result<Matrix> {
        let p = self.left.len();
        match i {
            0 => Err(Error::IndexOutOfRange { index: 0, max: p + 1 }),
            i if i <= p => Ok(self.left[i - 1].clone()),
            i if i == p + 1 => Ok(Matrix::identity(self.free_map.rows())),
            _ => Err(Error::IndexOutOfRange { index: i, max: p + 1 }),
        }
    }

    // L_iᵀ x, with the tail identity.
    fn left_transpose_apply(&self, i: usize, x: &Vector) -> Vector {
        match self.left.get(i - 1) {
            Some(l) => l.tr_mul_vec(x),
            None => x.clone(),
        }
    }

    fn left_apply(&self, i: usize, x: &Vector) -> Vector {
        match self.left.get(i - 1) {
            Some(l) => l.mul_vec(x),
            None => x.clone(),
        }
    }
}

/// `F` with `F z_0` the terminal state under zero controls and `μ ≡ 0`.
pub fn free_final_map(system: &ImpulsiveSystem) -> Result<Matrix> {
    Ok(TransportFactors::new(system)?.free_map)
}

/// `L_i`, `i = 1..=p+1`.
pub fn distributed_left_factor(system: &ImpulsiveSystem, i: usize) -> Result<Matrix> {
    let p = system.impulse_count();
    if i == 0 || i > p + 1 {
        return Err(Error::IndexOutOfRange { index: i, max: p + 1 });
    }
    TransportFactors::new(system)?.left_factor(i)
}

/// `K_k`, `k = 1..=p`.
pub fn impulse_left_factor(system: &ImpulsiveSystem, k: usize) -> Result<Matrix> {
    let p = system.impulse_count();
    if k == 0 || k > p {
        return Err(Error::IndexOutOfRange { index: k, max: p });
    }
    Ok(TransportFactors::new(system)?.impulse.swap_remove(k - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianBundle {
    pub gamma: Matrix,
    pub gamma_tilde: Matrix,
    pub theta: Matrix,
    pub theta_tilde: Matrix,
    pub total: Matrix,
    pub factors: TransportFactors,
}

impl GramianBundle {
    pub fn free_map(&self) -> &Matrix {
        &self.factors.free_map
    }

    pub fn left_factors(&self) -> &[Matrix] {
        &self.factors.left
    }

    pub fn impulse_factors(&self) -> &[Matrix] {
        &self.factors.impulse
    }

    pub fn state_dim(&self) -> usize {
        self.total.rows()
    }

    /// Costates `ψ_i = L_{i+1}ᵀ φ`, one per interval, for the adjoint control law.
    pub fn costates(&self, phi: &Vector) -> Vec<Vector> {
        (1..=self.factors.left.len() + 1)
            .map(|i| self.factors.left_transpose_apply(i, phi))
            .collect()
    }

    /// `v_k = K_kᵀ φ`.
    pub fn impulse_controls(&self, phi: &Vector) -> Vec<Vector> {
        self.factors.impulse.iter().map(|k| k.tr_mul_vec(phi)).collect()
    }

    fn from_blocks(blocks: Vec<Matrix>, factors: TransportFactors) -> GramianBundle {
        let p = factors.left.len();
        let n = factors.free_map.rows();
        let mut theta = Matrix::zeros(n, n);
        for (l, g) in factors.left.iter().zip(&blocks) {
            theta = &theta + &l.matmul(g).matmul_tr(l);
        }
        let gamma = blocks[p].clone();
        let mut gamma_tilde = Matrix::zeros(n, n);
        let mut theta_tilde = Matrix::zeros(n, n);
        for (k, kf) in factors.impulse.iter().enumerate() {
            let outer = kf.matmul_tr(kf);
            if k + 1 == p {
                gamma_tilde = outer;
            } else {
                theta_tilde = &theta_tilde + &outer;
            }
        }
        let gamma = gamma.symmetrized();
        let gamma_tilde = gamma_tilde.symmetrized();
        let theta = theta.symmetrized();
        let theta_tilde = theta_tilde.symmetrized();
        let total = &(&(&gamma + &gamma_tilde) + &theta) + &theta_tilde;
        GramianBundle {
            gamma,
            gamma_tilde,
            theta,
            theta_tilde,
            total,
            factors,
        }
    }
}

// G_i on the grid: Σ_nodes w X Xᵀ with X = S(t_i − s) Ω.
fn interval_block(sg: &Semigroup, omega: &Matrix, iv: &GridInterval) -> Result<Matrix> {
    let n = omega.rows();
    let mut g = Matrix::zeros(n, n);
    for (s, w) in iv.nodes() {
        let x = sg.evolution(iv.end - s)?.left_mul(omega);
        g.add_scaled(w, &x.matmul_tr(&x));
    }
    Ok(g)
}

/// Gramian blocks by quadrature on the shared grid.
pub fn assemble(system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<GramianBundle> {
    check_grid(system, grid)?;
    let factors = TransportFactors::new(system)?;
    let blocks = grid
        .intervals()
        .iter()
        .map(|iv| interval_block(system.semigroup(), system.control_map(), iv))
        .collect::<Result<Vec<_>>>()?;
    Ok(GramianBundle::from_blocks(blocks, factors))
}

/// Gramian blocks from exact exponential integrals (spectral backend only).
pub fn closed_form_bundle(system: &ImpulsiveSystem) -> Result<GramianBundle> {
    let rates = system.semigroup().decay_rates().ok_or(Error::UnsupportedBackend)?;
    let factors = TransportFactors::new(system)?;
    let gram = system.control_map().matmul_tr(system.control_map());
    let sched = system.schedule();
    let blocks = (0..sched.interval_count())
        .map(|k| {
            let (a, c) = sched.interval(k);
            let span = c - a;
            Matrix::from_fn(gram.rows(), gram.cols(), |i, j| {
                gram[(i, j)] * exponential_integral(rates[i] + rates[j], span)
            })
        })
        .collect();
    Ok(GramianBundle::from_blocks(blocks, factors))
}

/// `∫_0^Δ e^{−c τ} dτ`, with the `c = 0` limit `Δ`.
pub fn exponential_integral(c: f64, span: f64) -> f64 {
    if c == 0.0 {
        span
    } else {
        -(-c * span).exp_m1() / c
    }
}

fn check_grid(system: &ImpulsiveSystem, grid: &TimeGrid) -> Result<()> {
    let sched = system.schedule();
    let matches = grid.intervals().len() == sched.interval_count()
        && grid
            .intervals()
            .iter()
            .enumerate()
            .all(|(k, iv)| (iv.start, iv.end) == sched.interval(k));
    if matches {
        Ok(())
    } else {
        Err(Error::NodeMismatch)
    }
}

/// `M(u, v)` with `u` tabulated at the grid nodes.
pub fn apply_m(
    system: &ImpulsiveSystem,
    factors: &TransportFactors,
    grid: &TimeGrid,
    u: &[Vector],
    v: &[Vector],
) -> Result<Vector> {
    check_grid(system, grid)?;
    if u.len() != grid.node_count() {
        return Err(Error::dims("control samples", grid.node_count(), u.len()));
    }
    if v.len() != system.impulse_count() {
        return Err(Error::dims("impulse controls", system.impulse_count(), v.len()));
    }
    let sg = system.semigroup();
    let omega = system.control_map();
    let mut out = Vector::zeros(system.state_dim());
    for (k, iv) in grid.intervals().iter().enumerate() {
        let mut acc = Vector::zeros(system.state_dim());
        for ((s, w), ui) in iv.nodes().zip(&u[iv.first_node..]) {
            ui.check_dim("control sample", system.control_dim())?;
            acc.axpy(w, &sg.apply(iv.end - s, &omega.mul_vec(ui))?);
        }
        out += &factors.left_apply(k + 1, &acc);
    }
    for (kf, vk) in factors.impulse.iter().zip(v) {
        vk.check_dim("impulse control", system.impulse_dim())?;
        out += &kf.mul_vec(vk);
    }
    Ok(out)
}

/// `M* φ`: control samples at the grid nodes and impulse controls.
pub fn apply_m_star(
    system: &ImpulsiveSystem,
    factors: &TransportFactors,
    grid: &TimeGrid,
    phi: &Vector,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    check_grid(system, grid)?;
    phi.check_dim("costate", system.state_dim())?;
    let sg = system.semigroup();
    let omega = system.control_map();
    let mut u = Vec::with_capacity(grid.node_count());
    for (k, iv) in grid.intervals().iter().enumerate() {
        let psi = factors.left_transpose_apply(k + 1, phi);
        for (s, _) in iv.nodes() {
            u.push(omega.tr_mul_vec(&sg.apply_adjoint(iv.end - s, &psi)?));
        }
    }
    let v = factors.impulse.iter().map(|kf| kf.tr_mul_vec(phi)).collect();
    Ok((u, v))
}

/// Quadrature-weighted inner product of two control pairs.
pub fn control_inner(grid: &TimeGrid, a: (&[Vector], &[Vector]), b: (&[Vector], &[Vector])) -> f64 {
    let distributed: f64 = grid
        .nodes()
        .zip(a.0.iter().zip(b.0))
        .map(|((_, _, w), (x, y))| w * x.dot(y))
        .sum();
    let impulses: f64 = a.1.iter().zip(b.1).map(|(x, y)| x.dot(y)).sum();
    distributed + impulses
}

/// `M M*` materialized column by column.
pub fn materialize_mm_star(system: &ImpulsiveSystem, factors: &TransportFactors, grid: &TimeGrid) -> Result<Matrix> {
    let n = system.state_dim();
    let columns = (0..n)
        .map(|j| {
            let (u, v) = apply_m_star(system, factors, grid, &Vector::unit(n, j))?;
            apply_m(system, factors, grid, &u, &v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrix::from_columns(n, &columns))
}
