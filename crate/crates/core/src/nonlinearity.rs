//! Semilinear forcing terms `μ(t, z)`.

use crate::linalg::Vector;

/// Growth class of `μ`, used by the existence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `μ ≡ 0`.
    Zero,
    /// `‖μ(t, z)‖ ≤ bound` everywhere.
    Bounded { bound: f64 },
    /// `‖μ(t, z)‖ ≤ g(t) Λ(‖z‖)` with `‖g‖_∞ ≤ g_bound` and
    /// `lim inf Λ(r)/r = d`.
    LinearGrowth { d: f64, g_bound: f64 },
}

impl Growth {
    /// The asymptotic growth coefficient `d` (0 for bounded forcing).
    pub fn d_coef(&self) -> f64 {
        match *self {
            Growth::Zero | Growth::Bounded { .. } => 0.0,
            Growth::LinearGrowth { d, .. } => d,
        }
    }

    /// `‖g‖_∞` in the growth bound.
    pub fn g_bound(&self) -> f64 {
        match *self {
            Growth::Zero => 0.0,
            Growth::Bounded { bound } => bound,
            Growth::LinearGrowth { g_bound, .. } => g_bound,
        }
    }
}

pub trait Nonlinearity: Send + Sync {
    fn evaluate(&self, t: f64, z: &Vector) -> Vector;

    fn growth(&self) -> Growth;

    fn is_zero(&self) -> bool {
        matches!(self.growth(), Growth::Zero)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroForcing;

impl Nonlinearity for ZeroForcing {
    fn evaluate(&self, _t: f64, z: &Vector) -> Vector {
        Vector::zeros(z.dim())
    }

    fn growth(&self) -> Growth {
        Growth::Zero
    }
}

/// `μ(t, z) = scale · z / (1 + ‖z‖²)`; bounded by `|scale| / 2`, vanishes
/// at `z = 0`, Lipschitz with constant `|scale|`.
#[derive(Debug, Clone, Copy)]
pub struct Saturation {
    pub scale: f64,
}

impl Nonlinearity for Saturation {
    fn evaluate(&self, _t: f64, z: &Vector) -> Vector {
        let r2 = z.dot(z);
        z.scaled(self.scale / (1.0 + r2))
    }

    fn growth(&self) -> Growth {
        Growth::Bounded {
            bound: 0.5 * self.scale.abs(),
        }
    }
}

/// `μ(t, z) = d · g · z` with constant `g(t) ≡ g_bound`.
#[derive(Debug, Clone, Copy)]
pub struct LinearForcing {
    pub d: f64,
    pub g_bound: f64,
}

impl Nonlinearity for LinearForcing {
    fn evaluate(&self, _t: f64, z: &Vector) -> Vector {
        z.scaled(self.d * self.g_bound)
    }

    fn growth(&self) -> Growth {
        Growth::LinearGrowth {
            d: self.d,
            g_bound: self.g_bound,
        }
    }
}

/// Adapts a closure with a declared growth class.
pub struct FnForcing<F> {
    f: F,
    growth: Growth,
}

impl<F> FnForcing<F>
where
    F: Fn(f64, &Vector) -> Vector + Send + Sync,
{
    pub fn new(growth: Growth, f: F) -> Self {
        FnForcing { f, growth }
    }
}

impl<F> Nonlinearity for FnForcing<F>
where
    F: Fn(f64, &Vector) -> Vector + Send + Sync,
{
    fn evaluate(&self, t: f64, z: &Vector) -> Vector {
        (self.f)(t, z)
    }

    fn growth(&self) -> Growth {
        self.growth
    }
}
