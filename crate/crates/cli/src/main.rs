use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use impulse_fac::commands;
use impulse_fac::verify::{self, VerifyOptions};
use impulse_fac::{list_fixtures, load_fixture, CliError, Problem, RunConfig};

#[derive(Parser)]
#[command(
    name = "impulse-fac",
    version,
    about = "Finite-approximate control of impulsive evolution systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "fixture")]
    config: Option<PathBuf>,
    /// Use a built-in fixture instead of a config file.
    #[arg(long, global = true)]
    fixture: Option<String>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated, strictly descending regularization weights.
    #[arg(long, global = true, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss-Legendre order per panel.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Worker threads; all cores when absent, capped by IMPULSE_FAC_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the Gramian and report block norms and spectrum (JSON).
    Gramian,
    /// Linear synthesis at every alpha (JSON).
    Synthesize,
    /// Trajectory table (CSV) under the synthesized control.
    Simulate {
        /// Regularization weight; the first configured alpha when absent.
        #[arg(long, conflicts_with = "free")]
        alpha: Option<f64>,
        /// Simulate with zero controls instead.
        #[arg(long)]
        free: bool,
    },
    /// Alpha sweep (CSV).
    Sweep,
    /// Picard iteration and existence constants at every alpha (JSON).
    Semilinear,
    /// Run the invariant suite; exit 1 on any failed check.
    Verify {
        /// Replace every tolerance with this value.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Sweep the built-in heat fixture (CSV).
    HeatDemo,
    /// List the built-in fixtures.
    Fixtures,
}

impl Common {
    fn config(&self, default_fixture: Option<&str>) -> Result<Option<RunConfig>, CliError> {
        let mut cfg = match (&self.config, self.fixture.as_deref().or(default_fixture)) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(name)) => load_fixture(name)?.config,
            (None, None) => return Ok(None),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(alphas) = &self.alphas {
            cfg.alphas = alphas.clone();
        }
        if let Some(q) = self.quad_order {
            cfg.quadrature.order = q;
        }
        Ok(Some(cfg))
    }

    fn problem(&self, default_fixture: Option<&str>) -> Result<Problem, CliError> {
        match self.config(default_fixture)? {
            Some(cfg) => cfg.build(),
            None => Err(CliError::Config {
                path: "(command line)".into(),
                message: "--config <path> or --fixture <name> is required".into(),
            }),
        }
    }

    fn emit(&self, problem: Option<&Problem>, text: &str) -> Result<(), CliError> {
        let target = self
            .out
            .clone()
            .or_else(|| problem.and_then(|p| p.config.output.clone()));
        match target {
            Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|source| CliError::Output {
                        path: "(stdout)".into(),
                        source,
                    })
            }
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    let threads = commands::worker_count(c.threads);
    match cli.command {
        Command::Gramian => {
            let p = c.problem(None)?;
            c.emit(Some(&p), &json(&commands::gramian(&p)?))
        }
        Command::Synthesize => {
            let p = c.problem(None)?;
            c.emit(Some(&p), &json(&commands::synthesize_all(&p, &p.config.alphas)?))
        }
        Command::Simulate { alpha, free } => {
            let p = c.problem(None)?;
            let alpha = if free {
                None
            } else {
                Some(alpha.unwrap_or(p.config.alphas[0]))
            };
            let traj = commands::simulate(&p, alpha)?;
            c.emit(Some(&p), &commands::trajectory_csv(&traj)?)
        }
        Command::Sweep => {
            let p = c.problem(None)?;
            let rows = commands::sweep(&p, &p.config.alphas, threads)?;
            c.emit(Some(&p), &commands::sweep_csv(&rows)?)
        }
        Command::HeatDemo => {
            let p = c.problem(Some("heat-n32-p2"))?;
            let rows = commands::sweep(&p, &p.config.alphas, threads)?;
            c.emit(Some(&p), &commands::sweep_csv(&rows)?)
        }
        Command::Semilinear => {
            let p = c.problem(None)?;
            c.emit(Some(&p), &json(&commands::semilinear(&p, &p.config.alphas, threads)?))
        }
        Command::Verify {
            tolerance,
            json: as_json,
        } => {
            let cfg = c.config(None)?;
            let opts = VerifyOptions {
                tolerance,
                seed: c.seed.or(cfg.as_ref().map(|k| k.seed)).unwrap_or(0),
            };
            let (checks, problem) = match cfg {
                Some(cfg) => {
                    let p = cfg.build()?;
                    (verify::run_config(&p, opts, threads)?, Some(p))
                }
                None => (verify::run_builtin(opts, threads)?, None),
            };
            let text = if as_json {
                json(&checks)
            } else {
                checks.iter().map(|k| format!("{k}\n")).collect()
            };
            c.emit(problem.as_ref(), &text)?;
            let failed = checks.iter().filter(|k| k.failed()).count();
            if failed > 0 {
                return Err(CliError::Verification { failed });
            }
            Ok(())
        }
        Command::Fixtures => c.emit(
            None,
            &list_fixtures().iter().map(|n| format!("{n}\n")).collect::<String>(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(CliError::OK),
        Err(e) => {
            eprintln!("impulse-fac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
