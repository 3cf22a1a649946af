//! JSON run configuration and its translation into core objects.
//!
//! Every validation failure names the offending field with a path such as
//! `schedule.impulse_times[0]`.

use std::path::{Path, PathBuf};

use impulse_fac_core::heat::{self, EigenConvention, HeatConfig, TargetKind};
use impulse_fac_core::linalg::orthonormalize;
use impulse_fac_core::nonlinearity::{LinearForcing, Saturation, ZeroForcing};
use impulse_fac_core::semilinear::PicardConfig;
use impulse_fac_core::{
    GramianBundle, ImpulseSchedule, ImpulsiveSystem, Matrix, Nonlinearity, ProjectionSubspace, QuadratureRule,
    Semigroup, TimeGrid, Vector,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: &str = "impulse-fac/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemSpec,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub subspace: SubspaceSpec,
    pub target: TargetSpec,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub picard: PicardSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_alphas() -> Vec<f64> {
    heat::decade_grid(6)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Spectral {
        decay_rates: Vec<f64>,
        control_map: Vec<Vec<f64>>,
        #[serde(default)]
        jumps: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        impulse_maps: Vec<Vec<Vec<f64>>>,
        z0: Vec<f64>,
    },
    Dense {
        generator: Vec<Vec<f64>>,
        control_map: Vec<Vec<f64>>,
        #[serde(default)]
        jumps: Vec<Vec<Vec<f64>>>,
        #[serde(default)]
        impulse_maps: Vec<Vec<Vec<f64>>>,
        z0: Vec<f64>,
    },
    /// The truncated heat equation with resetting impulses.
    Heat {
        modes: usize,
        #[serde(default)]
        convention: Convention,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Dirichlet,
    PaperLiteral,
}

impl From<Convention> for EigenConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Dirichlet => EigenConvention::Dirichlet,
            Convention::PaperLiteral => EigenConvention::PaperLiteral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub impulse_times: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    /// The first `d` coordinate directions.
    Dimension(usize),
    /// The span of explicit vectors, orthonormalized.
    Vectors(Vec<Vec<f64>>),
}

impl Default for SubspaceSpec {
    fn default() -> Self {
        SubspaceSpec::Dimension(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Vector(Vec<f64>),
    /// Unit vector of coordinate `n` (1-based).
    Eigenmode(usize),
    /// Seeded `c_n ∝ ξ_n n^{−decay}`, normalized; uses the run seed.
    SmoothRandom {
        decay: f64,
    },
    /// `h = F z_0`: the uncontrolled terminal state.
    FreeEvolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_panels")]
    pub panels: usize,
    /// Geometric grading levels; chosen from the stiffness when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grading: Option<usize>,
}

fn default_order() -> usize {
    20
}

fn default_panels() -> usize {
    1
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: default_order(),
            panels: default_panels(),
            grading: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    #[default]
    Zero,
    /// `scale · z / (1 + ‖z‖²)`.
    Saturation { scale: f64 },
    /// `d · g · z`.
    Linear { d: f64, g_bound: f64 },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Box<dyn Nonlinearity> {
        match *self {
            NonlinearitySpec::Zero => Box::new(ZeroForcing),
            NonlinearitySpec::Saturation { scale } => Box::new(Saturation { scale }),
            NonlinearitySpec::Linear { d, g_bound } => Box::new(LinearForcing { d, g_bound }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for PicardSpec {
    fn default() -> Self {
        let d = PicardConfig::default();
        PicardSpec {
            tol: d.tol,
            max_iter: d.max_iter,
            damping: d.damping,
        }
    }
}

impl From<PicardSpec> for PicardConfig {
    fn from(p: PicardSpec) -> Self {
        PicardConfig {
            tol: p.tol,
            max_iter: p.max_iter,
            damping: p.damping,
        }
    }
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn finite(path: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(path, format!("expected a finite number, got {x}")))
    }
}

fn matrix(path: &str, rows: &[Vec<f64>], shape: (usize, Option<usize>)) -> Result<Matrix, CliError> {
    if rows.len() != shape.0 {
        return Err(invalid(path, format!("expected {} rows, got {}", shape.0, rows.len())));
    }
    let cols = shape.1.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(invalid(
                format!("{path}[{i}]"),
                format!("expected {cols} columns, got {}", row.len()),
            ));
        }
        for (j, &x) in row.iter().enumerate() {
            finite(&format!("{path}[{i}][{j}]"), x)?;
        }
    }
    if cols == 0 {
        return Err(invalid(path, "matrix needs at least one column"));
    }
    Matrix::from_rows(rows).map_err(|e| invalid(path, e.to_string()))
}

fn vector(path: &str, xs: &[f64], dim: usize) -> Result<Vector, CliError> {
    if xs.len() != dim {
        return Err(invalid(path, format!("expected {dim} entries, got {}", xs.len())));
    }
    for (i, &x) in xs.iter().enumerate() {
        finite(&format!("{path}[{i}]"), x)?;
    }
    Ok(Vector::from(xs.to_vec()))
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<ImpulseSchedule, CliError> {
        let b = self.horizon;
        if !(b > 0.0) || !b.is_finite() {
            return Err(invalid(
                "schedule.horizon",
                format!("horizon must be positive, got {b}"),
            ));
        }
        let mut prev = 0.0;
        for (i, &t) in self.impulse_times.iter().enumerate() {
            if !(t > prev && t < b) {
                return Err(invalid(
                    format!("schedule.impulse_times[{i}]"),
                    format!("impulse times must increase strictly inside (0, {b}), got {t}"),
                ));
            }
            prev = t;
        }
        ImpulseSchedule::new(self.impulse_times.clone(), b).map_err(|e| invalid("schedule", e.to_string()))
    }
}

/// Every object a pipeline stage needs, built from one config.
pub struct Problem {
    pub config: RunConfig,
    pub system: ImpulsiveSystem,
    pub grid: TimeGrid,
    pub bundle: GramianBundle,
    pub subspace: ProjectionSubspace,
    pub target: Vector,
    pub mu: Box<dyn Nonlinearity>,
    pub picard: PicardConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(
                if path == "." { String::from("(root)") } else { path },
                e.inner().to_string(),
            )
        })?;
        cfg.check_schema()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("(file)", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn check_schema(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA {
            return Err(invalid(
                "schema",
                format!("unsupported schema {:?}, expected {SCHEMA:?}", self.schema),
            ));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<ImpulsiveSystem, CliError> {
        let schedule = self.schedule.build()?;
        let p = schedule.len();
        let (semigroup, n, control, jumps, impulse_maps, z0) = match &self.system {
            SystemSpec::Heat { modes, convention, z0 } => {
                if *modes < 2 {
                    return Err(invalid("system.modes", format!("need at least 2 modes, got {modes}")));
                }
                let z0 = z0.as_ref().map(|z| vector("system.z0", z, *modes)).transpose()?;
                let cfg = HeatConfig {
                    modes: *modes,
                    schedule,
                    convention: (*convention).into(),
                    z0,
                };
                return heat::build_heat(&cfg).map_err(|e| invalid("system", e.to_string()));
            }
            SystemSpec::Spectral {
                decay_rates,
                control_map,
                jumps,
                impulse_maps,
                z0,
            } => {
                let n = decay_rates.len();
                if n == 0 {
                    return Err(invalid("system.decay_rates", "need at least one rate"));
                }
                for (i, &r) in decay_rates.iter().enumerate() {
                    finite(&format!("system.decay_rates[{i}]"), r)?;
                }
                (
                    Semigroup::spectral(decay_rates.clone()),
                    n,
                    control_map,
                    jumps,
                    impulse_maps,
                    z0,
                )
            }
            SystemSpec::Dense {
                generator,
                control_map,
                jumps,
                impulse_maps,
                z0,
            } => {
                let n = generator.len();
                if n == 0 {
                    return Err(invalid("system.generator", "generator is empty"));
                }
                let a = matrix("system.generator", generator, (n, Some(n)))?;
                let sg = Semigroup::dense(a).map_err(|e| invalid("system.generator", e.to_string()))?;
                (sg, n, control_map, jumps, impulse_maps, z0)
            }
        };
        let omega = matrix("system.control_map", control, (n, None))?;
        if jumps.len() != p {
            return Err(invalid(
                "system.jumps",
                format!("expected {p} jump maps (one per impulse), got {}", jumps.len()),
            ));
        }
        if impulse_maps.len() != p {
            return Err(invalid(
                "system.impulse_maps",
                format!(
                    "expected {p} impulse maps (one per impulse), got {}",
                    impulse_maps.len()
                ),
            ));
        }
        let jumps = jumps
            .iter()
            .enumerate()
            .map(|(k, b)| matrix(&format!("system.jumps[{k}]"), b, (n, Some(n))))
            .collect::<Result<Vec<_>, _>>()?;
        let impulse_dim = impulse_maps.first().and_then(|d| d.first()).map(Vec::len);
        let impulse_maps = impulse_maps
            .iter()
            .enumerate()
            .map(|(k, d)| matrix(&format!("system.impulse_maps[{k}]"), d, (n, impulse_dim)))
            .collect::<Result<Vec<_>, _>>()?;
        let z0 = vector("system.z0", z0, n)?;
        ImpulsiveSystem::new(semigroup, omega, jumps, impulse_maps, z0, schedule)
            .map_err(|e| invalid("system", e.to_string()))
    }

    pub fn build_rule(&self, system: &ImpulsiveSystem) -> Result<QuadratureRule, CliError> {
        let q = &self.quadrature;
        if q.order == 0 {
            return Err(invalid("quadrature.order", "order must be positive"));
        }
        if q.panels == 0 {
            return Err(invalid("quadrature.panels", "panel count must be positive"));
        }
        let built = match q.grading {
            Some(levels) => QuadratureRule::graded(q.order, q.panels, levels),
            None => QuadratureRule::resolving(q.order, q.panels, stiffness(system)),
        };
        built.map_err(|e| invalid("quadrature", e.to_string()))
    }

    pub fn build_subspace(&self, n: usize) -> Result<ProjectionSubspace, CliError> {
        match &self.subspace {
            SubspaceSpec::Dimension(d) => heat::build_subspace(*d, n).map_err(|_| {
                invalid(
                    "subspace.dimension",
                    format!("dimension {d} exceeds state dimension {n}"),
                )
            }),
            SubspaceSpec::Vectors(vs) if vs.is_empty() => Ok(ProjectionSubspace::empty(n)),
            SubspaceSpec::Vectors(vs) => {
                let vs = vs
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vector(&format!("subspace.vectors[{i}]"), v, n))
                    .collect::<Result<Vec<_>, _>>()?;
                orthonormalize(&vs, 1e-10).map_err(|e| invalid("subspace.vectors", e.to_string()))
            }
        }
    }

    pub fn build_target(&self, system: &ImpulsiveSystem, bundle: &GramianBundle) -> Result<Vector, CliError> {
        let n = system.state_dim();
        match &self.target {
            TargetSpec::Vector(h) => vector("target.vector", h, n),
            TargetSpec::Eigenmode(k) => heat::build_target(TargetKind::Eigenmode(*k), n)
                .map_err(|_| invalid("target.eigenmode", format!("mode {k} outside 1..={n}"))),
            TargetSpec::SmoothRandom { decay } => heat::build_target(
                TargetKind::SmoothRandom {
                    decay: *decay,
                    seed: self.seed,
                },
                n,
            )
            .map_err(|e| invalid("target.smooth_random.decay", e.to_string())),
            TargetSpec::FreeEvolution => Ok(bundle.free_map().mul_vec(system.z0())),
        }
    }

    pub fn check_alphas(&self) -> Result<(), CliError> {
        heat::check_alphas(&self.alphas).map_err(|e| invalid("alphas", e.to_string()))
    }

    /// Builds everything; numerical failures during assembly surface as
    /// [`CliError::Numerical`].
    pub fn build(&self) -> Result<Problem, CliError> {
        self.check_alphas()?;
        let picard: PicardConfig = self.picard.into();
        picard.validate().map_err(|e| invalid("picard", e.to_string()))?;
        if let NonlinearitySpec::Saturation { scale } = self.nonlinearity {
            finite("nonlinearity.scale", scale)?;
        }
        if let NonlinearitySpec::Linear { d, g_bound } = self.nonlinearity {
            if !(d >= 0.0) || !(g_bound >= 0.0) {
                return Err(invalid("nonlinearity", "d and g_bound must be nonnegative"));
            }
        }
        let system = self.build_system()?;
        let rule = self.build_rule(&system)?;
        let grid = TimeGrid::new(system.schedule(), &rule);
        let subspace = self.build_subspace(system.state_dim())?;
        let bundle = impulse_fac_core::gramian::assemble(&system, &grid)?;
        let target = self.build_target(&system, &bundle)?;
        Ok(Problem {
            config: self.clone(),
            system,
            grid,
            bundle,
            subspace,
            target,
            mu: self.nonlinearity.build(),
            picard,
        })
    }
}

/// `max rate × longest interval`, the exponent range the quadrature must resolve.
fn stiffness(system: &ImpulsiveSystem) -> f64 {
    let sched = system.schedule();
    let longest = (0..sched.interval_count())
        .map(|k| {
            let (a, c) = sched.interval(k);
            c - a
        })
        .fold(0.0, f64::max);
    let rate = match system.semigroup() {
        Semigroup::Spectral { decay_rates } => decay_rates.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
        Semigroup::Dense { generator, .. } => generator.one_norm(),
    };
    rate * longest
}
