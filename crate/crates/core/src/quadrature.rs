//! Composite Gauss–Legendre rules.

use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std is linked and the inherent methods win
use num_traits::Float;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One panel of a composite rule: absolute nodes and weights on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub start: f64,
    pub end: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Composite Gauss–Legendre rule applied per impulse interval.
///
/// Each interval is cut into `panels_per_interval` equal panels. With
/// `grading_levels = g > 0` the first and last panel are additionally split
/// geometrically (ratio 1/2, `g` times) toward the interval ends, which is
/// where the stiff modes of a spectral semigroup concentrate.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    panels_per_interval: usize,
    grading_levels: usize,
    reference_nodes: Vec<f64>,
    reference_weights: Vec<f64>,
    barycentric: Vec<f64>,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::new(20, 1).expect("default rule is valid")
    }
}

impl QuadratureRule {
    pub fn new(order: usize, panels_per_interval: usize) -> Result<Self> {
        Self::graded(order, panels_per_interval, 0)
    }

    pub fn graded(order: usize, panels_per_interval: usize, grading_levels: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidInput(alloc::format!(
                "quadrature order must be at least 2, got {order}"
            )));
        }
        if panels_per_interval == 0 {
            return Err(Error::InvalidInput("panels per interval must be positive".into()));
        }
        let (reference_nodes, reference_weights) = gauss_legendre(order);
        let barycentric = barycentric_weights(&reference_nodes);
        Ok(QuadratureRule {
            order,
            panels_per_interval,
            grading_levels,
            reference_nodes,
            reference_weights,
            barycentric,
        })
    }

    /// A graded rule whose smallest panels resolve `e^{−λτ}` for
    /// `λ · Δ ≤ stiffness`, with `Δ` the longest interval.
    pub fn resolving(order: usize, panels_per_interval: usize, stiffness: f64) -> Result<Self> {
        let levels = if stiffness > 1.0 {
            (stiffness.log2().ceil() as usize).min(60)
        } else {
            0
        };
        Self::graded(order, panels_per_interval, levels)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn panels_per_interval(&self) -> usize {
        self.panels_per_interval
    }

    pub fn grading_levels(&self) -> usize {
        self.grading_levels
    }

    pub fn reference_nodes(&self) -> &[f64] {
        &self.reference_nodes
    }

    pub fn reference_weights(&self) -> &[f64] {
        &self.reference_weights
    }

    /// Nodes and weights mapped to `[a, c]`.
    pub fn map_to(&self, a: f64, c: f64) -> Panel {
        let half = 0.5 * (c - a);
        let mid = 0.5 * (c + a);
        Panel {
            start: a,
            end: c,
            nodes: self.reference_nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.reference_weights.iter().map(|w| half * w).collect(),
        }
    }

    /// Panel boundaries of one interval, ascending, including both ends.
    pub fn breakpoints(&self, a: f64, c: f64) -> Vec<f64> {
        let m = self.panels_per_interval;
        let width = (c - a) / m as f64;
        let mut uniform: Vec<f64> = (0..=m).map(|k| a + width * k as f64).collect();
        uniform[m] = c;
        if self.grading_levels == 0 || c <= a {
            return uniform;
        }
        let g = self.grading_levels;
        let mut out = Vec::with_capacity(m + 2 * g + 1);
        let first_end = uniform[1];
        let last_start = uniform[m - 1];
        out.push(a);
        if m == 1 {
            // One panel graded at both ends: split at the midpoint first.
            let mid = 0.5 * (a + c);
            for k in (1..=g).rev() {
                out.push(a + (mid - a) * 0.5f64.powi(k as i32));
            }
            out.push(mid);
            for k in 1..=g {
                out.push(c - (c - mid) * 0.5f64.powi(k as i32));
            }
        } else {
            for k in (1..=g).rev() {
                out.push(a + (first_end - a) * 0.5f64.powi(k as i32));
            }
            out.extend_from_slice(&uniform[1..m]);
            for k in 1..=g {
                out.push(c - (c - last_start) * 0.5f64.powi(k as i32));
            }
        }
        out.push(c);
        out
    }

    /// Panels covering `[a, c]`.
    pub fn panels(&self, a: f64, c: f64) -> Vec<Panel> {
        self.breakpoints(a, c)
            .windows(2)
            .map(|w| self.map_to(w[0], w[1]))
            .collect()
    }

    /// `∫_a^c f` by the composite rule.
    pub fn integrate(&self, a: f64, c: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.panels(a, c)
            .iter()
            .map(|p| p.nodes.iter().zip(&p.weights).map(|(x, w)| w * f(*x)).sum::<f64>())
            .sum()
    }

    /// Lagrange basis values at reference coordinate `x ∈ [-1, 1]` for the
    /// interpolant through the reference nodes (barycentric form).
    pub fn interpolation_weights(&self, x: f64) -> Vec<f64> {
        let nodes = &self.reference_nodes;
        if let Some(k) = nodes.iter().position(|&n| n == x) {
            let mut e = alloc::vec![0.0; nodes.len()];
            e[k] = 1.0;
            return e;
        }
        let terms: Vec<f64> = nodes.iter().zip(&self.barycentric).map(|(n, w)| w / (x - n)).collect();
        let denom: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(j, xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect();
    let scale = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    w.into_iter().map(|x| x / scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3.0f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_degree_2q_minus_1() {
        for q in [2usize, 5, 13, 20] {
            let rule = QuadratureRule::new(q, 1).unwrap();
            let deg = 2 * q - 1;
            let got = rule.integrate(0.0, 2.0, |t| t.powi(deg as i32));
            let want = 2.0f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((got - want).abs() <= 1e-13 * want, "q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn weights_sum_to_length() {
        let rule = QuadratureRule::graded(20, 3, 6).unwrap();
        let total: f64 = rule.panels(0.5, 2.0).iter().flat_map(|p| p.weights.clone()).sum();
        assert!((total - 1.5).abs() < 1e-14);
    }

    #[test]
    fn graded_breakpoints() {
        let rule = QuadratureRule::graded(4, 1, 2).unwrap();
        assert_eq!(
            rule.breakpoints(0.0, 1.0),
            alloc::vec![0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0]
        );
        let rule = QuadratureRule::graded(4, 2, 1).unwrap();
        assert_eq!(rule.breakpoints(0.0, 1.0), alloc::vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn graded_rule_resolves_stiff_exponential() {
        let c = 20_000.0;
        let rule = QuadratureRule::graded(20, 1, 12).unwrap();
        let got = rule.integrate(0.0, 1.0 / 3.0, |s| (-c * (1.0 / 3.0 - s)).exp());
        let want = -(-c / 3.0f64).exp_m1() / c;
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let rule = QuadratureRule::new(6, 1).unwrap();
        let values: Vec<f64> = rule.reference_nodes().iter().map(|x| x * x * x - 2.0 * x).collect();
        for x in [-0.9, -0.3, 0.0, 0.41, 1.0] {
            let w = rule.interpolation_weights(x);
            let got: f64 = w.iter().zip(&values).map(|(a, b)| a * b).sum();
            assert!((got - (x * x * x - 2.0 * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn invalid_rules() {
        assert!(QuadratureRule::new(1, 1).is_err());
        assert!(QuadratureRule::new(4, 0).is_err());
    }
}
